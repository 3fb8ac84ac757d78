"""Deterministic CSV/JSON writers and generated plot scripts."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .coupling import SchemeKind, Trajectory
from .stability import SweepTable

TRAJECTORY_HEADER = ("t", "lambda", "lambda_dot", "Ta", "Ka", "Ca", "p")
SWEEP_HEADER = ("dt", "re1", "im1", "re2", "im2", "re3", "im3", "rho")

# JSON schema of summary.json
SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["preset", "model", "source", "files"],
    "properties": {
        "preset": {"type": "string"},
        "model": {"type": "string"},
        "source": {"type": "string"},
        "files": {"type": "array", "items": {"type": "string"}},
        "runs": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["status", "oscillation_score"],
                "properties": {
                    "status": {"enum": ["ok", "failed"]},
                    "message": {"type": "string"},
                    "steps_recorded": {"type": "integer"},
                    "oscillation_score": {"type": "number"},
                    "lambda_min": {"type": ["number", "null"]},
                    "ta_max": {"type": ["number", "null"]},
                },
            },
        },
        "pairwise_e_inf": {"type": "object", "additionalProperties": {"type": ["number", "null"]}},
        "verdicts": {"type": "object"},
        "convergence": {
            "type": "object",
            "required": ["dts", "reference_dt", "e2", "e_inf", "slopes"],
        },
    },
}


def fmt(x: float) -> str:
    """Shortest round-trip representation (at most 17 significant digits)."""
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def write_json(path: Path, data) -> None:
    text = json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def trajectory_csv(traj: Trajectory) -> str:
    cols = (traj.t, traj.lam, traj.lam_dot, traj.ta, traj.ka, traj.ca, traj.p)
    lines = [",".join(TRAJECTORY_HEADER)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_trajectory(traj: Trajectory, path: str | Path) -> list[Path]:
    """Write ``<path>`` (CSV) and the ``.json`` metadata sidecar next to it."""
    path = Path(path)
    path.write_text(trajectory_csv(traj), encoding="utf-8", newline="\n")
    meta = dict(traj.meta)
    meta.update(status=traj.status, message=traj.message, failed_step=traj.failed_step)
    sidecar = path.with_suffix(".json")
    write_json(sidecar, meta)
    return [path, sidecar]


def sweep_csv(table: SweepTable) -> str:
    lines = [",".join(SWEEP_HEADER)]
    for row in table.rows:
        if row.eigs is None:
            vals = [math.nan] * 6
        else:
            vals = []
            for z in row.eigs:
                vals += [z.real, z.imag]
        lines.append(",".join(fmt(v) for v in [row.dt, *vals, row.rho]))
    return "\n".join(lines) + "\n"


def plot_trajectories_script(csv_names: list[str], title: str) -> str:
    names = ",\n    ".join(repr(n) for n in csv_names)
    return f'''"""Generated plot script: strain and active tension against time."""
import csv
import matplotlib.pyplot as plt

FILES = [
    {names},
]

fig, (ax_t, ax_l) = plt.subplots(1, 2, figsize=(11, 4))
for name in FILES:
    with open(name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = [float(r["t"]) for r in rows]
    ax_t.plot(t, [float(r["Ta"]) / 1e3 for r in rows], label=name[:-4])
    ax_l.plot(t, [float(r["lambda"]) for r in rows], label=name[:-4])
ax_t.set_xlabel("t [s]")
ax_t.set_ylabel("T_a [kPa]")
ax_l.set_xlabel("t [s]")
ax_l.set_ylabel("lambda [-]")
ax_l.legend(fontsize="small")
fig.suptitle({title!r})
fig.tight_layout()
fig.savefig({title.replace(" ", "_") + ".png"!r}, dpi=150)
'''


def plot_sweep_script(csv_names: list[str], title: str) -> str:
    names = ",\n    ".join(repr(n) for n in csv_names)
    return f'''"""Generated plot script: real part, imaginary part and modulus of the eigenvalues against dt."""
import csv
import matplotlib.pyplot as plt

FILES = [
    {names},
]
COLUMNS = {list(SWEEP_HEADER)!r}

fig, axes = plt.subplots(1, 3, figsize=(14, 4))
for name in FILES:
    with open(name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    dt = [float(r["dt"]) for r in rows]
    for i in (1, 2, 3):
        re = [float(r[f"re{{i}}"]) for r in rows]
        im = [float(r[f"im{{i}}"]) for r in rows]
        mod = [(a * a + b * b) ** 0.5 for a, b in zip(re, im)]
        lbl = name[:-4] if i == 1 else None
        axes[0].semilogx(dt, re, ".", ms=2, label=lbl)
        axes[1].semilogx(dt, im, ".", ms=2)
        axes[2].semilogx(dt, mod, ".", ms=2)
for ax, lab in zip(axes, ("Re(sigma)", "Im(sigma)", "|sigma|")):
    ax.set_xlabel("dt [s]")
    ax.set_ylabel(lab)
    ax.axhline(1.0, color="k", lw=0.5, ls="--")
    ax.axhline(-1.0, color="k", lw=0.5, ls="--")
axes[0].legend(fontsize="x-small")
fig.suptitle({title!r})
fig.tight_layout()
fig.savefig({title.replace(" ", "_") + ".png"!r}, dpi=150)
'''


def plot_convergence_script(summary_name: str, title: str) -> str:
    return f'''"""Generated plot script: convergence of the strain error against dt."""
import json
import matplotlib.pyplot as plt

with open({summary_name!r}) as fh:
    conv = json.load(fh)["convergence"]

fig, (ax2, axi) = plt.subplots(1, 2, figsize=(10, 4))
for scheme, errs in conv["e2"].items():
    ax2.loglog(conv["dts"], errs, "o-", label=scheme)
for scheme, errs in conv["e_inf"].items():
    axi.loglog(conv["dts"], errs, "o-", label=scheme)
for ax, lab in ((ax2, "e_2"), (axi, "e_inf")):
    e0 = max(v[0] for v in conv["e_inf"].values() if v[0])
    ax.loglog(conv["dts"], [e0 * d / conv["dts"][0] for d in conv["dts"]], "k--", lw=0.8, label="order 1")
    ax.set_xlabel("dt [s]")
    ax.set_ylabel(lab)
axi.legend(fontsize="small")
fig.suptitle({title!r})
fig.tight_layout()
fig.savefig({title.replace(" ", "_") + ".png"!r}, dpi=150)
'''


def _case_of(name: str) -> str:
    """File stem without its trailing scheme name."""
    stem = name[:-4] if name.endswith(".csv") else name
    for kind in sorted((k.value for k in SchemeKind), key=len, reverse=True):
        if stem.endswith("_" + kind):
            return stem[: -len(kind) - 1]
    return stem


def emit_reports(bundle, out_dir: str | Path) -> list[Path]:
    """Write the full, deterministic file set of a preset bundle; returns the paths in write order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    traj_csvs = []
    for name in sorted(bundle.trajectories):
        paths = write_trajectory(bundle.trajectories[name], out / f"{name}.csv")
        written += paths
        traj_csvs.append(paths[0].name)
    sweep_csvs = []
    for name in sorted(bundle.sweeps):
        p = out / f"sweep_{name}.csv"
        p.write_text(sweep_csv(bundle.sweeps[name]), encoding="utf-8", newline="\n")
        written.append(p)
        sweep_csvs.append(p.name)

    scripts = {}
    if traj_csvs:
        groups: dict[str, list[str]] = {}
        for n in traj_csvs:
            key = _case_of(n) if bundle.preset == "quasistatic-fig3" else bundle.preset
            groups.setdefault(key, []).append(n)
        for key, names in groups.items():
            scripts[f"plot_{key}.py"] = plot_trajectories_script(names, f"{bundle.model} {key}")
    if sweep_csvs:
        groups = {}
        for n in sweep_csvs:
            case = _case_of(n[len("sweep_"):])
            groups.setdefault(case, []).append(n)
        for case, names in groups.items():
            scripts[f"plot_sweep_{case}.py"] = plot_sweep_script(names, f"eigenvalues {case}")
    if "convergence" in bundle.summary:
        scripts["plot_convergence.py"] = plot_convergence_script("summary.json", f"{bundle.model} convergence")
    for fname in sorted(scripts):
        p = out / fname
        p.write_text(scripts[fname], encoding="utf-8", newline="\n")
        written.append(p)

    summary = dict(bundle.summary)
    summary["files"] = sorted(p.name for p in written)
    p = out / "summary.json"
    write_json(p, summary)
    written.append(p)
    return written
