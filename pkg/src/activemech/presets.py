"""Experiment presets: isotonic twitch, load ramp, quasistatic activation, stability sweeps, convergence."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import CONVERGENCE_DTS, REFERENCE_DT, oscillation_score, run_convergence
from .coupling import RunConfig, SchemeKind, Trajectory, simulate
from .mechanics import CalciumProgram, LoadProgram, MechanicsParams
from .stability import SweepTable, classify, instability_windows, log_grid, sweep, threshold_dt

PRESET_IDS = ("twitch", "ramp", "quasistatic-fig3", "stability-sweep", "convergence")
COUPLED_SCHEMES = (SchemeKind.MONOLITHIC, SchemeKind.SEGREGATED, SchemeKind.STABILIZED)

TEST_CASE_MECH = MechanicsParams(mass=0.1, sigma=10.0, k_p=1e6, potential="log")
TWITCH_CALCIUM = CalciumProgram(kind="transient", c0=0.1, c_max=1.6, t0=0.1, tau1=0.02, tau2=0.05)

# constant calcium (uM) and initial load (Pa) of the ramp test
RAMP_SETTINGS = {
    "NHS06": (0.6, 50e3),
    "L17": (0.6, 100e3),
    "RDQ20-MF": (0.3, 100e3),
    "MDM": (0.6, 100e3),  # calcium is not an input of the minimal model
}

SOURCES = {
    "twitch": "isotonic twitch, p = 0, biexponential calcium transient (c0 0.1 uM, cmax 1.6 uM, t0 0.1 s, tau 0.02/0.05 s), sigma 10 Pa s, M 0.1 Pa s^2, log potential",
    "ramp": "constant calcium, load ramped linearly from p_bar to 0 over 0.5 s from t = 0.1 s, equilibrium start",
    "quasistatic-fig3": "minimal model, quasistatic quadratic mechanics, p = 0, K_p in {1, 4} MPa",
    "stability-sweep": "quasistatic (K_p 1 and 4 MPa) and damped/inertial (sigma 10 Pa s, M 0 and 0.1 Pa s^2, K_p 1 MPa) eigenvalue sweeps at mu0 = mu0_f / r",
    "convergence": "monolithic reference at dt 1e-4 s; dt in {4, 2, 1, 0.5, 0.25} ms for monolithic and stabilized-segregated",
}


@dataclass
class ExperimentPreset:
    id: str
    model: str = "MDM"
    schemes: tuple = COUPLED_SCHEMES
    dt: float = 1e-3
    t_end: float = 1.0
    stepper: str | None = None
    substep: int = 1
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in PRESET_IDS:
            raise ValueError(f"unknown preset {self.id!r}; expected one of {', '.join(PRESET_IDS)}")
        self.schemes = tuple(SchemeKind.parse(s) for s in self.schemes)


@dataclass
class ReportBundle:
    preset: str
    model: str
    trajectories: dict[str, Trajectory] = field(default_factory=dict)
    sweeps: dict[str, SweepTable] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def twitch_config(model: str, scheme, dt: float = 1e-3, t_end: float = 1.0, **kw) -> RunConfig:
    # literature models start relaxed at diastolic calcium; the minimal model starts detached
    initial = "explicit" if model == "MDM" else "prerelax"
    base = dict(
        model=model, scheme=scheme, dt=dt, t_end=t_end, mech=TEST_CASE_MECH,
        calcium=TWITCH_CALCIUM, load=LoadProgram(kind="constant", p_bar=0.0), initial=initial,
    )
    base.update(kw)
    return RunConfig(**base)


def ramp_config(model: str, scheme, dt: float = 1e-3, t_end: float = 1.0, **kw) -> RunConfig:
    ca, p_bar = RAMP_SETTINGS[model]
    base = dict(
        model=model, scheme=scheme, dt=dt, t_end=t_end, mech=TEST_CASE_MECH,
        calcium=CalciumProgram.constant(ca),
        load=LoadProgram(kind="linear-ramp", p_bar=p_bar, start=0.1, duration=0.5, target=0.0),
        initial="prerelax",
    )
    base.update(kw)
    return RunConfig(**base)


def fig3_config(scheme, k_p: float, dt: float = 1e-3, t_end: float = 1.0, **kw) -> RunConfig:
    base = dict(
        model="MDM", scheme=scheme, dt=dt, t_end=t_end, mech=MechanicsParams(k_p=k_p),
        load=LoadProgram(kind="constant", p_bar=0.0),
    )
    base.update(kw)
    return RunConfig(**base)


def _run_all(configs: dict[str, RunConfig], jobs: int) -> dict[str, Trajectory]:
    if jobs > 1 and len(configs) > 1 and all(isinstance(c.model, str) for c in configs.values()):
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {name: pool.submit(simulate, cfg) for name, cfg in configs.items()}
            return {name: f.result() for name, f in futures.items()}
    return {name: simulate(cfg) for name, cfg in configs.items()}


def _trajectory_summary(trajs: dict[str, Trajectory]) -> dict:
    out = {}
    for name, tr in trajs.items():
        out[name] = {
            "status": tr.status,
            "message": tr.message,
            "steps_recorded": len(tr) - 1,
            "oscillation_score": oscillation_score(tr.lam),
            "lambda_min": float(np.min(tr.lam)),
            "ta_max": float(np.max(tr.ta)),
        }
    pairs = {}
    names = sorted(trajs)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ta, tb = trajs[a], trajs[b]
            if ta.ok and tb.ok and np.array_equal(ta.t, tb.t):
                pairs[f"{a}|{b}"] = float(np.max(np.abs(ta.lam - tb.lam)))
    return {"runs": out, "pairwise_e_inf": pairs}


def run_preset(preset: ExperimentPreset | str, model: str = "MDM", jobs: int = 1, **kw) -> ReportBundle:
    if isinstance(preset, str):
        preset = ExperimentPreset(preset, model=model, **kw)
    bundle = ReportBundle(preset.id, preset.model)
    bundle.summary = {"preset": preset.id, "model": preset.model, "source": SOURCES[preset.id]}
    common = dict(dt=preset.dt, t_end=preset.t_end, stepper=preset.stepper, substep=preset.substep, **preset.overrides)

    if preset.id in ("twitch", "ramp"):
        make = twitch_config if preset.id == "twitch" else ramp_config
        configs = {f"{preset.id}_{s.value}": make(preset.model, s, **common) for s in preset.schemes}
        bundle.trajectories = _run_all(configs, jobs)
        bundle.summary.update(_trajectory_summary(bundle.trajectories))

    elif preset.id == "quasistatic-fig3":
        configs = {}
        for k_p in (4e6, 1e6):
            for s in preset.schemes:
                configs[f"fig3_kp{k_p / 1e6:g}MPa_{s.value}"] = fig3_config(s, k_p, **common)
        bundle.trajectories = _run_all(configs, jobs)
        bundle.summary.update(_trajectory_summary(bundle.trajectories))

    elif preset.id == "stability-sweep":
        grid = log_grid(1e-6, 10.0, 200)
        cases = {
            "quasistatic_kp1MPa": MechanicsParams(k_p=1e6),
            "quasistatic_kp4MPa": MechanicsParams(k_p=4e6),
            "damped_kp1MPa": MechanicsParams(sigma=10.0, k_p=1e6),
            "inertial_kp1MPa": MechanicsParams(mass=0.1, sigma=10.0, k_p=1e6),
        }
        verdicts = {}
        for case, mech in cases.items():
            for s in COUPLED_SCHEMES:
                name = f"{case}_{s.value}"
                table = sweep(s, grid, mech=mech)
                bundle.sweeps[name] = table
                v = classify(s, grid, mech=mech)
                verdicts[name] = {
                    "max_radius": float(np.nanmax(table.rho)),
                    "instability_windows": instability_windows(table),
                    "threshold_dt": threshold_dt(table),
                    "absolutely_stable_everywhere": bool(np.all(v.abs_stable)),
                    "zero_stable": bool(v.zero_stable),
                    "alpha": v.alpha,
                }
        bundle.summary["verdicts"] = verdicts

    elif preset.id == "convergence":
        base = twitch_config(preset.model, SchemeKind.MONOLITHIC, **common)
        schemes = [s for s in preset.schemes if s in (SchemeKind.MONOLITHIC, SchemeKind.STABILIZED)] or [
            SchemeKind.MONOLITHIC,
            SchemeKind.STABILIZED,
        ]
        rep = run_convergence(base, schemes, CONVERGENCE_DTS, REFERENCE_DT)
        bundle.summary["convergence"] = rep.as_dict()
    return bundle


__all__ = [
    "PRESET_IDS",
    "ExperimentPreset",
    "ReportBundle",
    "run_preset",
    "twitch_config",
    "ramp_config",
    "fig3_config",
    "TEST_CASE_MECH",
    "TWITCH_CALCIUM",
    "RAMP_SETTINGS",
]
