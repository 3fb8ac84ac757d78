"""Spectral analysis of the linear minimal coupled model under the three coupling schemes.

The iteration acts on ``y = (mu1, lambda^k, lambda^(k-1))`` as ``A y' = B y + h``
with ``mu0`` frozen; ``C = A^-1 B`` is the amplification matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import MinimalModel, MinimalModelParams
from .coupling import SchemeKind, step_monolithic, step_segregated, step_stabilized
from .mechanics import MechanicsParams, MechHistory

ABS_STABLE_MARGIN = 1e-12


@dataclass(frozen=True)
class SchemeMatrices:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class EigenSet:
    values: np.ndarray  # complex, sorted by modulus descending

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _scheme(scheme) -> SchemeKind:
    s = SchemeKind.parse(scheme)
    if s is SchemeKind.FRACTIONAL:
        # same lambda sequence as the stabilized scheme
        return SchemeKind.STABILIZED
    return s


def assemble(
    scheme,
    mu0: float,
    dt: float,
    params: MinimalModelParams | None = None,
    mech: MechanicsParams | None = None,
    p: float = 0.0,
) -> SchemeMatrices:
    if not dt > 0:
        raise ValueError("dt must be positive")
    params = params or MinimalModelParams()
    mech = mech or MechanicsParams()
    if mech.potential != "quadratic":
        raise ValueError("the iteration matrices are defined for the quadratic potential")
    s = _scheme(scheme)
    a_xb, kp, rdt = params.a_xb, mech.k_p, params.r * dt
    if s is SchemeKind.MONOLITHIC:
        a = [[1 + rdt, -mu0, 0.0], [a_xb, kp, 0.0], [0.0, 0.0, 1.0]]
        b = [[1.0, -mu0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    else:
        a = [[1 + rdt, 0.0, -mu0], [a_xb, kp, 0.0], [0.0, 0.0, 1.0]]
        b = [[1.0, 0.0, -mu0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        if s is SchemeKind.STABILIZED:
            a[1][1] += a_xb * mu0
            a[1][2] -= a_xb * mu0
    a, b = np.array(a), np.array(b)
    if mech.mass:
        inertia = mech.mass / dt**2 * np.array([0.0, 1.0, -1.0])
        a[1] += inertia
        b[1] += inertia
    if mech.sigma:
        a[1, 1] += mech.sigma / dt
        b[1, 1] += mech.sigma / dt
    if det3(a) == 0.0:
        raise np.linalg.LinAlgError("singular A: the scheme is not well posed at these parameters")
    c = np.linalg.solve(a, b)
    h = np.array([dt * params.mu1_f, p, 0.0])
    return SchemeMatrices(a, b, c, h)


def apply_step(m: SchemeMatrices, y: np.ndarray) -> np.ndarray:
    return np.linalg.solve(m.a, m.b @ y + m.h)


# ---------------------------------------------------------------------------
# eigenvalues


def det3(m) -> float:
    # cofactor expansion: a zero row or column gives an exact zero
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def pencil_polynomial(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients (highest degree first) of ``det(B - s A)``, expanded row by row.

    Structural zeros of ``B`` survive as exact zero coefficients.
    """
    n = 3
    coeffs = np.zeros(n + 1)
    for k in range(n + 1):
        total = 0.0
        for rows in itertools.combinations(range(n), k):
            mixed = [a[i] if i in rows else b[i] for i in range(n)]
            total += det3(mixed)
        coeffs[n - k] = (-1) ** k * total
    return coeffs


def _polish(coeffs: np.ndarray, roots: np.ndarray, iters: int = 3) -> np.ndarray:
    d = np.polyder(coeffs)
    out = roots.astype(complex)
    for _ in range(iters):
        for i, z in enumerate(out):
            if z == 0:
                continue
            dz = np.polyval(d, z)
            if dz == 0:
                continue
            step = np.polyval(coeffs, z) / dz
            if abs(step) < abs(z):
                out[i] = z - step
    return out


def _sorted(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    # real parts of conjugate pairs / real roots: drop round-off imaginary parts
    values = np.where(np.abs(values.imag) <= 1e-14 * np.maximum(np.abs(values), 1e-300), values.real + 0j, values)
    order = np.lexsort((-values.real, -np.abs(values)))
    return values[order]


def eig3(m: SchemeMatrices | np.ndarray) -> EigenSet:
    """Eigenvalues of ``C = A^-1 B`` as roots of the pencil polynomial, Newton-polished.

    A bare 3x3 array is treated as ``C`` itself (``A = I``).
    """
    if isinstance(m, SchemeMatrices):
        a, b = m.a, m.b
    else:
        b = np.asarray(m, dtype=float)
        a = np.eye(3)
    if b.shape != (3, 3) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("eig3 needs finite 3x3 matrices")
    coeffs = pencil_polynomial(a, b)
    if coeffs[0] == 0.0:
        raise np.linalg.LinAlgError("singular A")
    roots = np.roots(coeffs)
    roots = np.concatenate((roots, np.zeros(3 - roots.size)))
    roots = _polish(coeffs, roots)
    if not np.all(np.isfinite(roots)):
        # companion route failed; fall back to QR
        roots = np.linalg.eigvals(np.linalg.solve(a, b))
    return EigenSet(_sorted(roots))


def closed_form_eigs(scheme, mu0: float, dt: float, params: MinimalModelParams | None = None, mech: MechanicsParams | None = None) -> EigenSet:
    """Analytic eigenvalues of the quasistatic problem."""
    params = params or MinimalModelParams()
    mech = mech or MechanicsParams()
    if not mech.quasistatic:
        raise ValueError("closed-form eigenvalues exist only for quasistatic mechanics")
    s = _scheme(scheme)
    kp, ka, rdt = mech.k_p, params.a_xb * mu0, params.r * dt
    if s is SchemeKind.MONOLITHIC:
        vals = [(kp + ka) / (kp + ka + dt * kp * params.r), 0.0, 0.0]
    elif s is SchemeKind.STABILIZED:
        num = kp + ka + ka * rdt
        vals = [num / (num + dt * kp * params.r), 0.0, 0.0]
    else:
        # roots of K_p(1+r dt) s^2 - (K_p - K_a) s - K_a = 0, stable quadratic formula
        qa, qb, qc = kp * (1 + rdt), -(kp - ka), -ka
        disc = math.sqrt(qb * qb - 4 * qa * qc)
        q = -0.5 * (qb + math.copysign(disc, qb)) if qb != 0 else -0.5 * disc
        r1 = q / qa
        r2 = qc / q if q != 0 else 0.0
        vals = [r1, r2, 0.0]
    return EigenSet(_sorted(vals))


def match_eigs(x: EigenSet, y: EigenSet) -> float:
    """Largest distance between the two spectra under the best pairing."""
    best = math.inf
    for perm in itertools.permutations(range(len(y.values))):
        d = max(abs(x.values[i] - y.values[j]) for i, j in enumerate(perm))
        best = min(best, d)
    return best


# ---------------------------------------------------------------------------
# sweeps and classification


@dataclass
class SweepRow:
    dt: float
    eigs: np.ndarray | None
    rho: float
    error: str = ""


@dataclass
class SweepTable:
    scheme: SchemeKind
    mu0: float
    mech: MechanicsParams
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def dt(self) -> np.ndarray:
        return np.array([r.dt for r in self.rows])

    @property
    def rho(self) -> np.ndarray:
        return np.array([r.rho for r in self.rows])


def sweep(
    scheme,
    dt_grid: Iterable[float],
    mu0: float | None = None,
    params: MinimalModelParams | None = None,
    mech: MechanicsParams | None = None,
) -> SweepTable:
    params = params or MinimalModelParams()
    mech = mech or MechanicsParams()
    mu0 = params.mu0_steady if mu0 is None else mu0
    dts = list(dt_grid)
    if not dts:
        raise ValueError("empty dt grid")
    table = SweepTable(SchemeKind.parse(scheme), mu0, mech)
    for dt in dts:
        try:
            e = eig3(assemble(scheme, mu0, dt, params, mech))
            table.rows.append(SweepRow(dt, e.values, e.radius))
        except (ValueError, np.linalg.LinAlgError) as exc:
            table.rows.append(SweepRow(dt, None, math.nan, str(exc)))
    return table


def log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


def mu0_grid(params: MinimalModelParams, n: int = 33) -> np.ndarray:
    return np.linspace(0.0, params.mu0_steady, n)


@dataclass
class StabilityVerdict:
    dt: np.ndarray
    rho: np.ndarray  # max over the mu0 grid
    abs_stable: np.ndarray
    zero_stable: bool
    alpha: float
    worst_mu0: np.ndarray
    offending: list  # eigenvalue of largest modulus where not absolutely stable, else None


def classify(
    scheme,
    dt_grid: Sequence[float],
    params: MinimalModelParams | None = None,
    mech: MechanicsParams | None = None,
    mu0_values: Sequence[float] | None = None,
    alpha_fit_points: int = 3,
    zero_stable_tol: float = 1e-2,
) -> StabilityVerdict:
    """Absolute and zero stability over a ``mu0`` grid.

    Absolute stability at ``dt``: radius below ``1 - 1e-12`` for every ``mu0``.
    Zero stability: ``alpha`` is the least-squares slope of ``rho - 1`` against
    ``dt`` on the smallest grid points; the scheme is zero-stable when the tail
    obeys ``rho <= 1 + alpha dt`` and the excess ``alpha * dt_min`` vanishes
    with ``dt`` (below ``zero_stable_tol``).
    """
    params = params or MinimalModelParams()
    mu0s = mu0_grid(params) if mu0_values is None else np.asarray(mu0_values, dtype=float)
    dts = np.sort(np.asarray(dt_grid, dtype=float))
    rho = np.empty(dts.size)
    worst = np.empty(dts.size)
    offending = []
    for i, dt in enumerate(dts):
        best, best_mu, best_eig = -1.0, math.nan, None
        for mu0 in mu0s:
            e = eig3(assemble(scheme, mu0, dt, params, mech))
            if e.radius > best:
                best, best_mu, best_eig = e.radius, mu0, e.values[0]
        rho[i], worst[i] = best, best_mu
        offending.append(None if best < 1 - ABS_STABLE_MARGIN else best_eig)
    abs_stable = rho < 1 - ABS_STABLE_MARGIN
    k = min(alpha_fit_points, dts.size)
    x, y = dts[:k], rho[:k] - 1.0
    alpha = float(x @ y / (x @ x))
    bound_ok = bool(np.all(y <= np.maximum(alpha, 0.0) * x + 1e-12))
    zero_stable = bound_ok and max(alpha, 0.0) * dts[0] <= zero_stable_tol
    return StabilityVerdict(dts, rho, abs_stable, zero_stable, alpha, worst, offending)


def threshold_dt(table: SweepTable) -> float | None:
    """Largest ``dt`` below which every grid point is unstable (radius > 1); None if the smallest is stable."""
    dts, rho = table.dt, table.rho
    order = np.argsort(dts)
    last = None
    for i in order:
        if rho[i] > 1.0:
            last = dts[i]
        else:
            break
    return last


def instability_windows(table: SweepTable) -> list[tuple[float, float]]:
    """Contiguous runs of grid points with radius > 1, as ``(dt_lo, dt_hi)``."""
    order = np.argsort(table.dt)
    dts, rho = table.dt[order], table.rho[order]
    windows, start = [], None
    for i, (d, r) in enumerate(zip(dts, rho)):
        if r > 1.0 and start is None:
            start = i
        if (r <= 1.0 or i == len(dts) - 1) and start is not None:
            end = i if r > 1.0 else i - 1
            windows.append((float(dts[start]), float(dts[end])))
            start = None
    return windows


# ---------------------------------------------------------------------------
# Jacobian of the full iteration map


def jacobian_fd(phi: Callable[[np.ndarray], np.ndarray], psi: np.ndarray, delta: float | np.ndarray = 1e-6) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    steps = np.broadcast_to(np.asarray(delta, dtype=float), psi.shape)
    if np.any(steps <= 0):
        raise ValueError("delta must be positive")
    cols = []
    for j in range(psi.size):
        e = np.zeros_like(psi)
        e[j] = steps[j]
        fp, fm = phi(psi + e), phi(psi - e)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FloatingPointError("non-finite iteration map value")
        cols.append((fp - fm) / (2 * steps[j]))
    return np.column_stack(cols)


def jacobian_radius(phi: Callable[[np.ndarray], np.ndarray], psi: np.ndarray, delta: float | np.ndarray = 1e-6) -> tuple[float, np.ndarray]:
    """Spectral radius and eigenvalues of the central-difference Jacobian of ``phi`` at ``psi``."""
    eigs = np.linalg.eigvals(jacobian_fd(phi, psi, delta))
    return float(np.max(np.abs(eigs))), eigs


def minimal_iteration_map(
    scheme,
    dt: float,
    params: MinimalModelParams | None = None,
    mech: MechanicsParams | None = None,
    p: float = 0.0,
) -> Callable[[np.ndarray], np.ndarray]:
    """The coupled step as a map on ``(mu0, mu1, lambda^k, lambda^(k-1))``, built from the coupling engines."""
    model = MinimalModel(params or MinimalModelParams())
    mech = mech or MechanicsParams()
    step = {
        SchemeKind.MONOLITHIC: step_monolithic,
        SchemeKind.SEGREGATED: step_segregated,
        SchemeKind.STABILIZED: step_stabilized,
    }[_scheme(scheme)]

    def phi(psi):
        res = step(model, psi[:2], MechHistory(psi[2], psi[3]), dt, 0.0, p, mech)
        return np.array([res.state[0], res.state[1], res.lam, psi[2]])

    return phi
