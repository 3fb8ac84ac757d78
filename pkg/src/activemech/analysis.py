"""Error norms, oscillation detection and the convergence study."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coupling import RunConfig, SchemeKind, Trajectory, simulate

DEAD_BAND = 1e-9
CONVERGENCE_DTS = (4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4)
REFERENCE_DT = 1e-4


def error_norms(traj: Trajectory, ref: Trajectory) -> tuple[float, float]:
    """``(e2, e_inf)`` of the strain against ``ref`` linearly interpolated onto ``traj``'s grid."""
    t, ref_t = np.asarray(traj.t), np.asarray(ref.t)
    if t.size == 0 or ref_t.size == 0:
        raise ValueError("empty trajectory")
    tol = 1e-9 * max(abs(ref_t[-1]), 1.0)
    if t[0] < ref_t[0] - tol or t[-1] > ref_t[-1] + tol:
        raise ValueError(
            f"reference covers [{ref_t[0]}, {ref_t[-1]}] but the run spans [{t[0]}, {t[-1]}]"
        )
    diff = np.asarray(traj.lam) - np.interp(t, ref_t, ref.lam)
    n_steps = max(t.size - 1, 1)
    return math.sqrt(float(np.sum(diff**2)) / n_steps), float(np.max(np.abs(diff)))


def oscillation_score(lam: Sequence[float], dead_band: float = DEAD_BAND) -> float:
    """Sign changes of the strain increments larger than ``dead_band``, per step."""
    lam = np.asarray(lam, dtype=float)
    n_steps = lam.size - 1
    if n_steps < 1:
        return 0.0
    d = np.diff(lam)
    d = d[np.abs(d) > dead_band]
    changes = int(np.count_nonzero(np.sign(d[1:]) != np.sign(d[:-1])))
    return changes / n_steps


def fit_slope(dts: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dt)``; non-positive or non-finite errors are skipped."""
    x, y = np.asarray(dts, dtype=float), np.asarray(errors, dtype=float)
    ok = np.isfinite(y) & (y > 0)
    if np.count_nonzero(ok) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)
    return float(slope)


@dataclass
class ConvergenceReport:
    dts: list[float]
    reference_dt: float
    e2: dict[str, list[float]] = field(default_factory=dict)
    e_inf: dict[str, list[float]] = field(default_factory=dict)
    slopes: dict[str, dict[str, float]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def run_convergence(
    base: RunConfig,
    schemes: Sequence = (SchemeKind.MONOLITHIC, SchemeKind.STABILIZED),
    dts: Sequence[float] = CONVERGENCE_DTS,
    reference_dt: float = REFERENCE_DT,
) -> ConvergenceReport:
    """Errors of each scheme against a fine monolithic reference run of ``base``."""
    ref = simulate(dataclasses.replace(base, scheme=SchemeKind.MONOLITHIC, dt=reference_dt, substep=1))
    report = ConvergenceReport(list(dts), reference_dt)
    if not ref.ok:
        report.failures.append(f"reference: {ref.message}")
        return report
    for scheme in schemes:
        key = SchemeKind.parse(scheme).value
        e2s, einfs = [], []
        for dt in dts:
            tr = simulate(dataclasses.replace(base, scheme=scheme, dt=dt))
            if not tr.ok:
                report.failures.append(f"{key} dt={dt}: {tr.message}")
                e2s.append(math.nan)
                einfs.append(math.nan)
                continue
            e2, einf = error_norms(tr, ref)
            e2s.append(e2)
            einfs.append(einf)
        report.e2[key], report.e_inf[key] = e2s, einfs
        report.slopes[key] = {"e2": fit_slope(dts, e2s), "e_inf": fit_slope(dts, einfs)}
    return report
