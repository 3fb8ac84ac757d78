"""Zero-dimensional tissue mechanics and the external calcium and load programs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .solvers import SolverError, scalar_newton

POTENTIALS = ("quadratic", "log")


@dataclass(frozen=True)
class MechanicsParams:
    """Normalised mass (Pa s^2), viscosity (Pa s), passive stiffness (Pa) and elastic potential."""

    mass: float = 0.0
    sigma: float = 0.0
    k_p: float = 1e6
    potential: str = "quadratic"

    def __post_init__(self):
        if self.mass < 0 or self.sigma < 0:
            raise ValueError("mass and sigma must be nonnegative")
        if not self.k_p > 0:
            raise ValueError("k_p must be positive")
        if self.potential not in POTENTIALS:
            raise ValueError(f"potential must be one of {POTENTIALS}, got {self.potential!r}")

    @property
    def quasistatic(self) -> bool:
        return self.mass == 0 and self.sigma == 0


def elastic_energy(lam: float, params: MechanicsParams) -> float:
    if params.potential == "quadratic":
        return 0.5 * params.k_p * lam * lam
    if lam <= -1.0:
        raise ValueError(f"log potential undefined at lambda={lam} <= -1")
    return 0.5 * params.k_p * lam * math.log1p(lam)


def potential_derivative(lam: float, params: MechanicsParams) -> float:
    if params.potential == "quadratic":
        return params.k_p * lam
    if lam <= -1.0:
        raise ValueError(f"log potential undefined at lambda={lam} <= -1")
    return 0.5 * params.k_p * (math.log1p(lam) + lam / (1.0 + lam))


def potential_second_derivative(lam: float, params: MechanicsParams) -> float:
    if params.potential == "quadratic":
        return params.k_p
    if lam <= -1.0:
        raise ValueError(f"log potential undefined at lambda={lam} <= -1")
    return 0.5 * params.k_p * (1.0 / (1.0 + lam) + 1.0 / (1.0 + lam) ** 2)


# ---------------------------------------------------------------------------
# driving programs


@dataclass(frozen=True)
class TabulatedProgram:
    """Piecewise-linear program through ``(t, value)`` samples, held constant outside."""

    t: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.t) != len(self.values) or len(self.t) == 0:
            raise ValueError("tabulated program needs equally many (nonzero) times and values")
        if any(b <= a for a, b in zip(self.t, self.t[1:])):
            raise ValueError("tabulated times must be strictly increasing")

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.t, self.values))

    @classmethod
    def from_csv(cls, path) -> "TabulatedProgram":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]  # header
        return cls(tuple(float(r[0]) for r in rows), tuple(float(r[1]) for r in rows))


@dataclass(frozen=True)
class CalciumProgram:
    """Constant or biexponential calcium transient (uM, s)."""

    kind: str = "transient"
    c0: float = 0.1
    c_max: float = 1.6
    t0: float = 0.1
    tau1: float = 0.02
    tau2: float = 0.05
    table: TabulatedProgram | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "transient", "tabulated"):
            raise ValueError(f"unknown calcium program kind {self.kind!r}")
        if self.kind == "transient":
            if self.tau1 == self.tau2 or self.tau1 <= 0 or self.tau2 <= 0:
                raise ValueError("tau1 and tau2 must be positive and distinct")
            if not self.c_max >= self.c0 > 0:
                raise ValueError("transient needs c_max >= c0 > 0")
        if self.kind == "tabulated" and self.table is None:
            raise ValueError("tabulated calcium program needs a table")

    @classmethod
    def constant(cls, value: float) -> "CalciumProgram":
        return cls(kind="constant", c0=value, c_max=value)

    @property
    def beta(self) -> float:
        rho = self.tau1 / self.tau2
        return rho ** (-1.0 / (rho - 1.0)) - rho ** (-1.0 / (1.0 - 1.0 / rho))

    @property
    def t_peak(self) -> float:
        return self.t0 + math.log(self.tau1 / self.tau2) / (1.0 / self.tau2 - 1.0 / self.tau1)


def calcium_at(t: float, program: CalciumProgram) -> float:
    if program.kind == "constant":
        return program.c0
    if program.kind == "tabulated":
        return program.table(t)
    if t <= program.t0:
        return program.c0
    s = t - program.t0
    shape = math.exp(-s / program.tau1) - math.exp(-s / program.tau2)
    return program.c0 + (program.c_max - program.c0) / program.beta * shape


@dataclass(frozen=True)
class LoadProgram:
    """Constant load or a linear ramp from ``p_bar`` to ``target`` (Pa, s)."""

    kind: str = "constant"
    p_bar: float = 0.0
    start: float = 0.1
    duration: float = 0.5
    target: float = 0.0
    table: TabulatedProgram | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "linear-ramp", "tabulated"):
            raise ValueError(f"unknown load program kind {self.kind!r}")
        if self.kind == "linear-ramp" and not self.duration > 0:
            raise ValueError("ramp duration must be positive")
        if self.kind == "tabulated" and self.table is None:
            raise ValueError("tabulated load program needs a table")

    def held(self) -> "LoadProgram":
        """The same program frozen at its initial value."""
        return LoadProgram(kind="constant", p_bar=load_at(0.0, self))


def load_at(t: float, program: LoadProgram) -> float:
    if program.kind == "constant":
        return program.p_bar
    if program.kind == "tabulated":
        return program.table(t)
    if t <= program.start:
        return program.p_bar
    if t >= program.start + program.duration:
        return program.target
    frac = (t - program.start) / program.duration
    return program.p_bar + frac * (program.target - program.p_bar)


# ---------------------------------------------------------------------------
# discrete momentum balance


class MechHistory(NamedTuple):
    lambda_k: float
    lambda_km1: float

    @classmethod
    def at_rest(cls, lam0: float) -> "MechHistory":
        return cls(lam0, lam0)

    def push(self, lam_new: float) -> "MechHistory":
        return MechHistory(lam_new, self.lambda_k)

    def velocity(self, dt: float) -> float:
        return (self.lambda_k - self.lambda_km1) / dt


def mech_residual(lam_new: float, hist: MechHistory, dt: float, ta_star: float, p: float, params: MechanicsParams) -> float:
    if not dt > 0:
        raise ValueError("dt must be positive")
    lk, lkm1 = hist
    return (
        params.mass * (lam_new - 2.0 * lk + lkm1) / dt**2
        + params.sigma * (lam_new - lk) / dt
        + potential_derivative(lam_new, params)
        + ta_star
        - p
    )


def mech_residual_slope(lam_new: float, dt: float, params: MechanicsParams) -> float:
    return params.mass / dt**2 + params.sigma / dt + potential_second_derivative(lam_new, params)


def mech_tolerance(params: MechanicsParams) -> float:
    return 1e-8 * max(params.k_p, 1.0)


def mech_solve(
    hist: MechHistory,
    dt: float,
    tension_fn: Callable[[float], float],
    p: float,
    params: MechanicsParams,
    tension_slope: float = 0.0,
    max_iter: int = 50,
) -> float:
    """Root ``lambda^(k+1)`` of the discrete balance with tension ``tension_fn(lambda^(k+1))``.

    ``tension_slope`` is the (constant) derivative of ``tension_fn``; every
    scheme here injects a tension that is affine in the unknown.
    """

    def f(x):
        return mech_residual(x, hist, dt, tension_fn(x), p, params)

    def df(x):
        return mech_residual_slope(x, dt, params) + tension_slope

    try:
        lam, _ = scalar_newton(f, df, hist.lambda_k, ftol=mech_tolerance(params), max_iter=max_iter)
    except ValueError as exc:
        raise SolverError(f"mechanics solve left the potential's domain: {exc}") from exc
    return lam
