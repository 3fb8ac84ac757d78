"""Command-line front end: ``activemech {simulate,stability,converge,preset,params}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import CONVERGENCE_DTS, REFERENCE_DT, oscillation_score, run_convergence
from .config import apply_overrides, load_run_config
from .coupling import SchemeKind, simulate
from .mechanics import MechanicsParams
from .models import MODEL_IDS
from .params import ConfigError, check_params, expected_keys, find_params_file, write_default_files
from .presets import PRESET_IDS, ExperimentPreset, ReportBundle, run_preset, twitch_config
from .reports import emit_reports
from .stability import classify, instability_windows, log_grid, sweep, threshold_dt

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3

log = logging.getLogger("activemech")


def _common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="run-configuration INI file")
    p.add_argument("--model", choices=MODEL_IDS)
    p.add_argument("--scheme", help="monolithic, segregated, stabilized_segregated or fractional_step")
    p.add_argument("--dt", type=float, help="time step (s)")
    p.add_argument("--t-end", type=float, help="final time (s)")
    p.add_argument("--substep", type=int, help="mechanics solved every m-th step")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")


def _scheme(value):
    if value is None:
        return None
    try:
        return SchemeKind.parse(value)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run_config(args):
    if args.config is not None:
        cfg = load_run_config(args.config)
    else:
        cfg = twitch_config(args.model or "MDM", SchemeKind.STABILIZED)
    return apply_overrides(
        cfg, model=args.model, scheme=_scheme(args.scheme), dt=args.dt, t_end=args.t_end, substep=args.substep
    )


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    traj = simulate(cfg)
    name = f"{cfg.model_id}_{cfg.scheme.value}"
    bundle = ReportBundle("simulate", cfg.model_id, trajectories={name: traj})
    bundle.summary = {
        "preset": "simulate",
        "model": cfg.model_id,
        "source": str(args.config) if args.config else "default twitch configuration",
        "runs": {
            name: {
                "status": traj.status,
                "message": traj.message,
                "steps_recorded": len(traj) - 1,
                "oscillation_score": oscillation_score(traj.lam),
                "lambda_min": float(np.min(traj.lam)),
                "ta_max": float(np.max(traj.ta)),
            }
        },
    }
    emit_reports(bundle, args.out)
    print(f"{name}: {traj.status} ({len(traj) - 1} steps) -> {args.out}")
    if not traj.ok:
        print(f"solver failure: {traj.message}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_stability(args) -> int:
    mech = MechanicsParams(mass=args.mass, sigma=args.sigma, k_p=args.k_p)
    grid = log_grid(args.dt_min, args.dt_max, args.points)
    schemes = [_scheme(s) for s in args.scheme] if args.scheme else [
        SchemeKind.MONOLITHIC, SchemeKind.SEGREGATED, SchemeKind.STABILIZED
    ]
    bundle = ReportBundle("stability-sweep", "MDM")
    verdicts = {}
    for s in schemes:
        name = f"{args.name}_{s.value}"
        table = sweep(s, grid, mu0=args.mu0, mech=mech)
        v = classify(s, grid, mech=mech)
        bundle.sweeps[name] = table
        verdicts[name] = {
            "max_radius": float(np.nanmax(table.rho)),
            "instability_windows": instability_windows(table),
            "threshold_dt": threshold_dt(table),
            "absolutely_stable_everywhere": bool(np.all(v.abs_stable)),
            "zero_stable": bool(v.zero_stable),
            "alpha": v.alpha,
        }
        print(f"{name}: max radius {verdicts[name]['max_radius']:.6g}, zero-stable {v.zero_stable}")
    bundle.summary = {
        "preset": "stability-sweep",
        "model": "MDM",
        "source": f"mass {args.mass} Pa s^2, sigma {args.sigma} Pa s, k_p {args.k_p} Pa",
        "verdicts": verdicts,
    }
    emit_reports(bundle, args.out)
    return EXIT_OK


def cmd_converge(args) -> int:
    base = _run_config(args)
    schemes = [_scheme(s) for s in args.scheme_list] if args.scheme_list else [SchemeKind.MONOLITHIC, SchemeKind.STABILIZED]
    rep = run_convergence(base, schemes, tuple(args.dts), args.reference_dt)
    bundle = ReportBundle("convergence", base.model_id)
    bundle.summary = {
        "preset": "convergence",
        "model": base.model_id,
        "source": str(args.config) if args.config else "default twitch configuration",
        "convergence": rep.as_dict(),
    }
    emit_reports(bundle, args.out)
    for key, sl in rep.slopes.items():
        print(f"{key}: slope e2 {sl['e2']:.3f}, e_inf {sl['e_inf']:.3f}")
    for f in rep.failures:
        print(f"failure: {f}", file=sys.stderr)
    if rep.failures and not rep.e_inf:
        return EXIT_SOLVER
    return EXIT_OK


def cmd_preset(args) -> int:
    kw = {}
    for key in ("dt", "t_end", "substep"):
        if getattr(args, key) is not None:
            kw[key] = getattr(args, key)
    if args.scheme_list:
        kw["schemes"] = tuple(_scheme(s) for s in args.scheme_list)
    if args.stepper:
        kw["stepper"] = args.stepper
    model = args.model or "MDM"
    if find_params_file(model) is None:
        print(f"skipped: no parameter file for {model}; expected keys: {', '.join(expected_keys(model))}")
        return EXIT_OK
    try:
        preset = ExperimentPreset(args.name, model=model, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    bundle = run_preset(preset, jobs=args.jobs)
    files = emit_reports(bundle, args.out)
    for name, run in bundle.summary.get("runs", {}).items():
        print(f"{name}: {run['status']}, oscillation score {run['oscillation_score']:.4g}")
    print(f"{len(files)} files -> {args.out}")
    failed = [n for n, r in bundle.summary.get("runs", {}).items() if r["status"] != "ok"]
    if args.strict and failed:
        print(f"solver failures: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_params_check(args) -> int:
    models = [args.model] if args.model else list(MODEL_IDS)
    bad = 0
    for m in models:
        path = args.file if args.file is not None else find_params_file(m)
        problems = check_params(m, path)
        if problems:
            bad += 1
            for p in problems:
                print(f"{m}: {p}")
        else:
            print(f"{m}: ok ({path})")
    return EXIT_CONFIG if bad else EXIT_OK


def cmd_params_write(args) -> int:
    for p in write_default_files(args.directory):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activemech", description="Active-force / tissue-mechanics coupling bench")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration and write its trajectory")
    _common_run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stability", help="eigenvalue sweep of the linearized minimal model")
    p.add_argument("--scheme", action="append", help="repeatable; default: all coupled schemes")
    p.add_argument("--mass", type=float, default=0.0, help="Pa s^2")
    p.add_argument("--sigma", type=float, default=0.0, help="Pa s")
    p.add_argument("--k-p", type=float, default=1e6, help="Pa")
    p.add_argument("--mu0", type=float, default=None, help="attached fraction (default: steady state)")
    p.add_argument("--dt-min", type=float, default=1e-6)
    p.add_argument("--dt-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--name", default="sweep_case", help="prefix of the sweep CSV names")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("converge", help="convergence study against a fine monolithic reference")
    _common_run_flags(p)
    p.add_argument("--schemes", dest="scheme_list", action="append", help="repeatable; default: monolithic and stabilized")
    p.add_argument("--dts", type=float, nargs="+", default=list(CONVERGENCE_DTS))
    p.add_argument("--reference-dt", type=float, default=REFERENCE_DT)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("preset", help="run an experiment preset")
    p.add_argument("name", choices=PRESET_IDS)
    p.add_argument("--model", choices=MODEL_IDS)
    p.add_argument("--schemes", dest="scheme_list", action="append")
    p.add_argument("--stepper", choices=("implicit", "semimplicit"))
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--substep", type=int)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--strict", action="store_true", help="exit 2 when any run fails")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("params", help="parameter-file utilities")
    psub = p.add_subparsers(dest="params_command", required=True)
    c = psub.add_parser("check", help="validate parameter files")
    c.add_argument("--model", choices=MODEL_IDS)
    c.add_argument("--file", type=Path)
    c.set_defaults(func=cmd_params_check)
    w = psub.add_parser("write", help="write default parameter files")
    w.add_argument("directory", type=Path)
    w.set_defaults(func=cmd_params_write)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
