"""Small dense nonlinear solvers shared by the force models and the coupling engines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class SolverError(RuntimeError):
    """Raised when a nonlinear solve fails to converge or produces non-finite values."""

    def __init__(self, message: str, iterations: int = 0, residual: float = float("nan")):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


@dataclass
class NewtonInfo:
    iterations: int
    residual: float


def fd_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    f0: np.ndarray | None = None,
    scale: np.ndarray | None = None,
    rel_step: float = 1e-7,
) -> np.ndarray:
    """Forward-difference Jacobian with per-variable step ``rel_step * max(|x_j|, scale_j)``."""
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = fun(x)
    if scale is None:
        scale = np.ones_like(x)
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), scale[j])
        xp = x.copy()
        xp[j] += h
        h = xp[j] - x[j]
        jac[:, j] = (fun(xp) - f0) / h
    return jac


def newton(
    fun: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_iter: int = 50,
    x_scale: np.ndarray | None = None,
    f_scale: np.ndarray | None = None,
) -> tuple[np.ndarray, NewtonInfo]:
    """Plain Newton iteration (no line search) with a numeric Jacobian by default.

    Converged when the scaled update satisfies ``|dx_j| <= rtol * max(|x_j|, x_scale_j) + atol``
    for every component; ``f_scale`` normalises the reported residual.
    """
    x = np.array(x0, dtype=float)
    if x_scale is None:
        x_scale = np.ones_like(x)
    if f_scale is None:
        f_scale = np.ones_like(x)
    f = fun(x)
    res = float(np.max(np.abs(f / f_scale))) if f.size else 0.0
    for it in range(1, max_iter + 1):
        if not np.all(np.isfinite(f)):
            raise SolverError("non-finite residual", it - 1, res)
        J = jac(x) if jac is not None else fd_jacobian(fun, x, f, x_scale)
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Jacobian: {exc}", it, res) from exc
        x = x + dx
        f = fun(x)
        res = float(np.max(np.abs(f / f_scale))) if f.size else 0.0
        if np.all(np.abs(dx) <= rtol * np.maximum(np.abs(x), x_scale) + atol):
            if not np.all(np.isfinite(x)):
                raise SolverError("non-finite iterate", it, res)
            return x, NewtonInfo(it, res)
    raise SolverError("Newton did not converge", max_iter, res)


def scalar_newton(
    fun: Callable[[float], float],
    dfun: Callable[[float], float],
    x0: float,
    *,
    ftol: float,
    xtol: float = 1e-15,
    max_iter: int = 50,
) -> tuple[float, NewtonInfo]:
    """Scalar Newton. Iterates until the step is at round-off level, then checks ``|f| <= ftol``."""
    x = float(x0)
    f = fun(x)
    for it in range(1, max_iter + 1):
        d = dfun(x)
        if d == 0.0 or not np.isfinite(d) or not np.isfinite(f):
            raise SolverError("degenerate scalar Newton step", it, abs(f))
        dx = -f / d
        x += dx
        f = fun(x)
        if abs(dx) <= xtol * max(1.0, abs(x)):
            break
    else:
        if not abs(f) <= ftol:
            raise SolverError("scalar Newton did not converge", max_iter, abs(f))
        return x, NewtonInfo(max_iter, abs(f))
    if not abs(f) <= ftol:
        raise SolverError("scalar Newton stalled above tolerance", it, abs(f))
    return x, NewtonInfo(it, abs(f))
