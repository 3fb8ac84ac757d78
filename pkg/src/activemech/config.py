"""Run-configuration files (INI) mapped onto :class:`RunConfig`.

Sections and keys::

    [run]        model, scheme, stepper, dt, t_end, substep, initial, lam0, r0
    [mechanics]  mass, sigma, k_p, potential
    [calcium]    kind, c0, c_max, t0, tau1, tau2, file
    [load]       kind, p_bar, start, duration, target, file
    [params]     overrides of individual model parameters

Tabulated programs read a two-column ``t,value`` CSV given by ``file``,
resolved relative to the configuration file.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from pathlib import Path

from .coupling import RunConfig
from .mechanics import CalciumProgram, LoadProgram, MechanicsParams, TabulatedProgram
from .models import MODEL_IDS, build_model
from .params import ConfigError, load_params, params_from_section, read_ini

SECTIONS = ("run", "mechanics", "calcium", "load", "params")
RUN_KEYS = {
    "model": str, "scheme": str, "stepper": str, "dt": float, "t_end": float,
    "substep": int, "initial": str, "lam0": float, "r0": str,
}
MECH_KEYS = {"mass": float, "sigma": float, "k_p": float, "potential": str}
CALCIUM_KEYS = {"kind": str, "c0": float, "c_max": float, "t0": float, "tau1": float, "tau2": float, "file": str}
LOAD_KEYS = {"kind": str, "p_bar": float, "start": float, "duration": float, "target": float, "file": str}


def _typed(section: configparser.SectionProxy | dict, kinds: dict, name: str) -> dict:
    out = {}
    for key, text in dict(section).items():
        if key not in kinds:
            raise ConfigError(f"[{name}] unknown key {key!r}; expected one of {', '.join(kinds)}")
        try:
            out[key] = kinds[key](text.strip())
        except ValueError as exc:
            raise ConfigError(f"[{name}] bad value for {key}: {text!r}") from exc
    return out


def _table(values: dict, base: Path, name: str) -> dict:
    file = values.pop("file", None)
    if file is None:
        return values
    path = Path(file) if Path(file).is_absolute() else base / file
    try:
        values["table"] = TabulatedProgram.from_csv(path)
    except (OSError, IndexError, ValueError) as exc:
        raise ConfigError(f"[{name}] cannot read table {path}: {exc}") from exc
    values.setdefault("kind", "tabulated")
    return values


def config_from_parser(parser: configparser.ConfigParser, base: Path = Path(".")) -> RunConfig:
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}; expected {', '.join(SECTIONS)}")
    run = _typed(parser["run"] if parser.has_section("run") else {}, RUN_KEYS, "run")
    model_id = run.pop("model", "MDM")
    if model_id not in MODEL_IDS:
        raise ConfigError(f"unknown model {model_id!r}; expected one of {', '.join(MODEL_IDS)}")
    if "r0" in run:
        try:
            run["r0"] = tuple(float(v) for v in run["r0"].split(","))
        except ValueError as exc:
            raise ConfigError(f"[run] bad r0: {exc}") from exc
    try:
        kw = dict(run)
        if parser.has_section("mechanics"):
            kw["mech"] = MechanicsParams(**_typed(parser["mechanics"], MECH_KEYS, "mechanics"))
        if parser.has_section("calcium"):
            kw["calcium"] = CalciumProgram(**_table(_typed(parser["calcium"], CALCIUM_KEYS, "calcium"), base, "calcium"))
        if parser.has_section("load"):
            kw["load"] = LoadProgram(**_table(_typed(parser["load"], LOAD_KEYS, "load"), base, "load"))
        model = model_id
        if parser.has_section("params"):
            overrides = params_from_section(model_id, dict(parser["params"]), strict=False)
            changed = {k: getattr(overrides, k) for k in parser["params"]}
            params = dataclasses.replace(load_params(model_id), **changed)
            model = build_model(model_id, params, stepper=run.get("stepper"))
        return RunConfig(model=model, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    return config_from_parser(read_ini(path), path.parent)


def apply_overrides(cfg: RunConfig, **changes) -> RunConfig:
    """Replace fields given on the command line; ``None`` values are ignored."""
    changes = {k: v for k, v in changes.items() if v is not None}
    if "model" in changes and changes["model"] not in MODEL_IDS:
        raise ConfigError(f"unknown model {changes['model']!r}; expected one of {', '.join(MODEL_IDS)}")
    try:
        return dataclasses.replace(cfg, **changes)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
