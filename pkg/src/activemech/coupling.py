"""Time-stepping engines coupling a force model with the 0D mechanics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import ForceModel, MinimalModel
from .mechanics import (
    CalciumProgram,
    LoadProgram,
    MechanicsParams,
    MechHistory,
    calcium_at,
    load_at,
    mech_residual,
    mech_solve,
)
from .solvers import SolverError, newton


class SchemeKind(str, enum.Enum):
    MONOLITHIC = "monolithic"
    SEGREGATED = "segregated"
    STABILIZED = "stabilized_segregated"
    FRACTIONAL = "fractional_step"

    @classmethod
    def parse(cls, value: "str | SchemeKind") -> "SchemeKind":
        if isinstance(value, cls):
            return value
        aliases = {"stabilized": cls.STABILIZED, "fractional": cls.FRACTIONAL}
        key = str(value).strip().lower().replace("-", "_")
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scheme {value!r}; expected one of {names}") from None


class StepResult(NamedTuple):
    state: np.ndarray
    lam: float
    tension: float
    stiffness: float


# ---------------------------------------------------------------------------
# single steps


def step_segregated(model: ForceModel, r, hist: MechHistory, dt: float, ca: float, p: float, mech: MechanicsParams) -> StepResult:
    lam_star, lam_dot_star = hist.lambda_k, hist.velocity(dt)
    r_new = model.step(r, ca, lam_star, lam_dot_star, dt)
    ta, ka = model.outputs(r_new, lam_star)
    lam = mech_solve(hist, dt, lambda x: ta, p, mech)
    return StepResult(r_new, lam, ta, ka)


def step_stabilized(model: ForceModel, r, hist: MechHistory, dt: float, ca: float, p: float, mech: MechanicsParams) -> StepResult:
    lam_star, lam_dot_star = hist.lambda_k, hist.velocity(dt)
    r_new = model.step(r, ca, lam_star, lam_dot_star, dt)
    ta, ka = model.outputs(r_new, lam_star)
    lk = hist.lambda_k
    lam = mech_solve(hist, dt, lambda x: ta + ka * (x - lk), p, mech, tension_slope=ka)
    return StepResult(r_new, lam, ta, ka)


def step_monolithic(model: ForceModel, r, hist: MechHistory, dt: float, ca: float, p: float, mech: MechanicsParams) -> StepResult:
    r = np.asarray(r, dtype=float)
    n = r.size
    lk = hist.lambda_k

    def residual(x):
        r_new, lam = x[:n], x[n]
        lam_dot = (lam - lk) / dt
        res_r = model.step_residual(r_new, r, ca, lam, lam_dot, dt)
        res_l = mech_residual(lam, hist, dt, model.tension(r_new, lam), p, mech) / mech.k_p
        return np.append(res_r, res_l)

    # a segregated predictor puts Newton close to the root
    try:
        pred = step_stabilized(model, r, hist, dt, ca, p, mech)
        x0 = np.append(pred.state, pred.lam)
    except (SolverError, FloatingPointError, ValueError):
        x0 = np.append(r, lk)
    scale = np.append(model.state_scale(), 1e-2)
    try:
        x, _ = newton(
            residual,
            x0,
            rtol=model.newton_rtol,
            atol=model.newton_atol,
            max_iter=model.newton_max_iter,
            x_scale=scale,
        )
    except (FloatingPointError, ValueError) as exc:
        raise SolverError(f"monolithic residual evaluation failed: {exc}") from exc
    r_new, lam = x[:n], float(x[n])
    ta, ka = model.outputs(r_new, lam)
    return StepResult(r_new, lam, ta, ka)


class FractionalResult(NamedTuple):
    state: np.ndarray  # (mu0, mu1_tilde)
    lam: float
    tension: float
    stiffness: float
    mu1_tilde_star: float


def step_fractional(model: MinimalModel, r, hist: MechHistory, dt: float, ca: float, p: float, mech: MechanicsParams) -> FractionalResult:
    """Relaxation substep on ``mu1_tilde`` then the stretch substep solved together with the mechanics.

    The state carries ``mu1_tilde`` in place of ``mu1``; ``mu0`` follows its
    own implicit update.
    """
    if not isinstance(model, MinimalModel):
        raise TypeError("the fractional-step scheme is defined for the minimal model only")
    prm = model.params
    denom = 1.0 + prm.r * dt
    mu0 = (r[0] + prm.mu0_f * dt) / denom
    star = (r[1] + prm.mu1_f * dt) / denom
    lk = hist.lambda_k
    a = prm.a_xb
    lam = mech_solve(hist, dt, lambda x: a * (star + (x - lk) * mu0), p, mech, tension_slope=a * mu0)
    mu1_tilde = star + (lam - lk) * mu0
    return FractionalResult(np.array([mu0, mu1_tilde]), lam, a * mu1_tilde, a * mu0, star)


STEPPERS = {
    SchemeKind.SEGREGATED: step_segregated,
    SchemeKind.STABILIZED: step_stabilized,
    SchemeKind.MONOLITHIC: step_monolithic,
    SchemeKind.FRACTIONAL: step_fractional,
}


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class RunConfig:
    model: "str | ForceModel" = "MDM"
    scheme: SchemeKind = SchemeKind.STABILIZED
    stepper: str | None = None
    dt: float = 1e-3
    t_end: float = 1.0
    substep: int = 1
    mech: MechanicsParams = field(default_factory=MechanicsParams)
    calcium: CalciumProgram = field(default_factory=CalciumProgram)
    load: LoadProgram = field(default_factory=LoadProgram)
    initial: str = "explicit"  # or "prerelax"
    r0: tuple | None = None
    lam0: float = 0.0
    prerelax_tol: float = 1e-10
    prerelax_max_steps: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind.parse(self.scheme))
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if int(self.substep) != self.substep or self.substep < 1:
            raise ValueError("substep ratio must be an integer >= 1")
        if self.scheme is SchemeKind.MONOLITHIC and self.substep != 1:
            raise ValueError("the monolithic scheme does not support mechanics substepping")
        if self.scheme is SchemeKind.FRACTIONAL and self.substep != 1:
            raise ValueError("the fractional-step scheme does not support mechanics substepping")
        if self.initial not in ("explicit", "prerelax"):
            raise ValueError(f"unknown initial-state policy {self.initial!r}")
        n = self.n_steps
        if abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def build_model(self) -> ForceModel:
        if isinstance(self.model, ForceModel):
            return self.model
        from .models import build_model

        return build_model(self.model, stepper=self.stepper)

    @property
    def model_id(self) -> str:
        return self.model.name if isinstance(self.model, ForceModel) else self.model


@dataclass
class Trajectory:
    t: np.ndarray
    lam: np.ndarray
    lam_dot: np.ndarray
    ta: np.ndarray
    ka: np.ndarray
    ca: np.ndarray
    p: np.ndarray
    states: np.ndarray
    status: str = "ok"
    message: str = ""
    failed_step: int | None = None
    extra: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    FIELDS = ("t", "lam", "lam_dot", "ta", "ka", "ca", "p")

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def __len__(self) -> int:
        return len(self.t)


class _Recorder:
    def __init__(self, n_max: int, n_state: int):
        self.cols = {k: np.empty(n_max + 1) for k in Trajectory.FIELDS}
        self.states = np.empty((n_max + 1, n_state))
        self.extra: dict[str, list] = {}
        self.n = 0

    def add(self, t, lam, lam_dot, ta, ka, ca, p, state, **extra):
        i = self.n
        for k, v in zip(Trajectory.FIELDS, (t, lam, lam_dot, ta, ka, ca, p)):
            self.cols[k][i] = v
        self.states[i] = state
        for k, v in extra.items():
            self.extra.setdefault(k, []).append(v)
        self.n += 1

    def finish(self, **kw) -> Trajectory:
        n = self.n
        cols = {k: v[:n].copy() for k, v in self.cols.items()}
        extra = {k: np.asarray(v) for k, v in self.extra.items()}
        return Trajectory(**cols, states=self.states[:n].copy(), extra=extra, **kw)


def prerelax(model: ForceModel, cfg: RunConfig, r0: np.ndarray, lam0: float) -> tuple[np.ndarray, float, int]:
    """March with the initial calcium and load held fixed until the per-step change drops below tolerance.

    Uses the stabilized scheme, whose fixed points coincide with those of every scheme.
    """
    ca = calcium_at(0.0, cfg.calcium)
    p = load_at(0.0, cfg.load)
    r, hist = np.array(r0, dtype=float), MechHistory.at_rest(lam0)
    for k in range(1, cfg.prerelax_max_steps + 1):
        res = step_stabilized(model, r, hist, cfg.dt, ca, p, cfg.mech)
        change = max(float(np.max(np.abs(res.state - r))), abs(res.lam - hist.lambda_k))
        if not math.isfinite(change):
            raise SolverError("pre-relaxation diverged", k)
        r, hist = res.state, hist.push(res.lam)
        if change < cfg.prerelax_tol:
            return r, res.lam, k
    raise SolverError("pre-relaxation did not reach equilibrium", cfg.prerelax_max_steps, change)


def simulate(cfg: RunConfig) -> Trajectory:
    """Run ``cfg``; on solver breakdown the trajectory up to the last good step is returned with ``status='failed'``."""
    model = cfg.build_model()
    if cfg.scheme is SchemeKind.FRACTIONAL and not isinstance(model, MinimalModel):
        raise ValueError("the fractional-step scheme requires the minimal model")
    step = STEPPERS[cfg.scheme]
    dt, m = cfg.dt, int(cfg.substep)
    dt_mech = m * dt
    n = cfg.n_steps

    r = np.array(cfg.r0 if cfg.r0 is not None else model.initial_state(), dtype=float)
    if r.size != model.n_state:
        raise ValueError(f"initial state has {r.size} entries, model {model.name} expects {model.n_state}")
    lam0 = cfg.lam0
    meta = {"model": model.name, "scheme": cfg.scheme.value, "dt": dt, "substep": m, "n_steps": n}
    if cfg.initial == "prerelax":
        r, lam0, n_relax = prerelax(model, cfg, r, lam0)
        meta["prerelax_steps"] = n_relax

    hist = MechHistory.at_rest(lam0)
    rec = _Recorder(n, model.n_state)
    ta0, ka0 = model.outputs(r, lam0)
    extra0 = {}
    if cfg.scheme is SchemeKind.FRACTIONAL:
        extra0 = {"mu1_tilde_star": r[1]}
    rec.add(0.0, lam0, 0.0, ta0, ka0, calcium_at(0.0, cfg.calcium), load_at(0.0, cfg.load), r, **extra0)

    status, message, failed = "ok", "", None
    lam_cur = lam0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            t_new = (k + 1) * dt  # index based, no accumulated drift
            ca, p = calcium_at(t_new, cfg.calcium), load_at(t_new, cfg.load)
            try:
                if (k + 1) % m == 0:
                    if m == 1:
                        res = step(model, r, hist, dt, ca, p, cfg.mech)
                    else:
                        res = _finish_substep(model, r, hist, dt, dt_mech, ca, p, cfg)
                    hist = hist.push(res.lam)
                    lam_cur = res.lam
                else:
                    r_new = model.step(r, ca, hist.lambda_k, hist.velocity(dt_mech), dt)
                    ta, ka = model.outputs(r_new, hist.lambda_k)
                    res = StepResult(r_new, lam_cur, ta, ka)
                vals = np.append(res.state, [res.lam, res.tension, res.stiffness])
                if not np.all(np.isfinite(vals)):
                    raise SolverError("non-finite state", k + 1)
            except (SolverError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
                status, message, failed = "failed", f"step {k + 1}: {exc}", k + 1
                break
            r = res.state
            extra = {"mu1_tilde_star": res.mu1_tilde_star} if isinstance(res, FractionalResult) else {}
            rec.add(t_new, res.lam, hist.velocity(dt_mech), res.tension, res.stiffness, ca, p, r, **extra)
    return rec.finish(status=status, message=message, failed_step=failed, meta=meta)


def _finish_substep(model, r, hist, dt, dt_mech, ca, p, cfg) -> StepResult:
    """Last fine step of a mechanics window: advance the force model, then solve the mechanics over ``dt_mech``."""
    lam_star = hist.lambda_k
    r_new = model.step(r, ca, lam_star, hist.velocity(dt_mech), dt)
    ta, ka = model.outputs(r_new, lam_star)
    lk = lam_star
    if cfg.scheme is SchemeKind.STABILIZED:
        lam = mech_solve(hist, dt_mech, lambda x: ta + ka * (x - lk), p, cfg.mech, tension_slope=ka)
    elif cfg.scheme is SchemeKind.SEGREGATED:
        lam = mech_solve(hist, dt_mech, lambda x: ta, p, cfg.mech)
    else:
        raise ValueError(f"substepping is not available for the {cfg.scheme.value} scheme")
    return StepResult(r_new, lam, ta, ka)
