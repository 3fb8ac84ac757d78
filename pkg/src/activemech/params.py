"""Parameter files: one INI section per model, keys named after the dataclass fields.

Lookup order for ``<stem>.ini``: explicit path, the directories listed in
``ACTIVEMECH_PARAMS_PATH`` (``os.pathsep`` separated), then the copies shipped
with the package.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
import typing
from importlib import resources
from pathlib import Path

PARAMS_ENV = "ACTIVEMECH_PARAMS_PATH"


class ConfigError(ValueError):
    """Raised for missing or malformed configuration and parameter files."""


def _registry():
    from .models import REGISTRY

    return REGISTRY


def section_name(model_id: str) -> str:
    return model_id


def param_fields(params_cls) -> list[dataclasses.Field]:
    return [f for f in dataclasses.fields(params_cls) if f.init]


def expected_keys(model_id: str) -> list[str]:
    _, params_cls, _ = _registry()[model_id]
    return [f.name for f in param_fields(params_cls)]


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return repr(float(value))


def _parse(text: str, default):
    if isinstance(default, tuple):
        items = [s.strip() for s in text.split(",") if s.strip()]
        if len(items) != len(default):
            raise ConfigError(f"expected {len(default)} comma-separated values, got {text!r}")
        return tuple(float(s) for s in items)
    return float(text)


def params_to_ini(params, model_id: str, include_derived: bool = False) -> str:
    """Serialise ``params``; fields derived in ``__post_init__`` are left out unless asked for."""
    lines = [f"[{section_name(model_id)}]"]
    for f in param_fields(type(params)):
        if f.default is None and not include_derived:
            continue
        lines.append(f"{f.name} = {_format(getattr(params, f.name))}")
    return "\n".join(lines) + "\n"


def params_from_section(model_id: str, section: typing.Mapping[str, str], *, strict: bool = True):
    """Build a parameter object; unknown keys raise, missing keys keep defaults unless ``strict``."""
    _, params_cls, _ = _registry()[model_id]
    fields = {f.name: f for f in param_fields(params_cls)}
    unknown = sorted(set(section) - set(fields))
    if unknown:
        raise ConfigError(f"[{model_id}] unknown keys: {', '.join(unknown)}")
    missing = [name for name, f in fields.items() if name not in section and f.default is not None]
    if strict and missing:
        raise ConfigError(f"[{model_id}] missing keys: {', '.join(missing)}; expected {', '.join(fields)}")
    kwargs = {}
    defaults = params_cls()
    for name, text in section.items():
        try:
            kwargs[name] = _parse(text, getattr(defaults, name))
        except ValueError as exc:
            raise ConfigError(f"[{model_id}] bad value for {name}: {exc}") from exc
    try:
        return params_cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def search_dirs() -> list[Path]:
    env = os.environ.get(PARAMS_ENV, "")
    return [Path(p) for p in env.split(os.pathsep) if p]


def find_params_file(model_id: str) -> Path | None:
    if model_id not in _registry():
        raise ConfigError(f"unknown model {model_id!r}")
    stem = _registry()[model_id][2]
    for d in search_dirs():
        candidate = d / f"{stem}.ini"
        if candidate.is_file():
            return candidate
    shipped = resources.files("activemech") / "data" / "params" / f"{stem}.ini"
    if shipped.is_file():
        return Path(str(shipped))
    return None


def read_ini(path: str | os.PathLike) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parser


def load_params(model_id: str, path: str | os.PathLike | None = None):
    """Load the parameters of ``model_id`` from ``path`` or the search path."""
    if path is None:
        path = find_params_file(model_id)
        if path is None:
            raise ConfigError(
                f"no parameter file for {model_id}; expected keys: {', '.join(expected_keys(model_id))}"
            )
    parser = read_ini(path)
    if not parser.has_section(section_name(model_id)):
        raise ConfigError(f"{path}: no [{section_name(model_id)}] section")
    return params_from_section(model_id, dict(parser[section_name(model_id)]))


def check_params(model_id: str, path: str | os.PathLike | None = None) -> list[str]:
    """Return a list of problems (empty when the file loads cleanly)."""
    try:
        load_params(model_id, path)
    except (ConfigError, OSError) as exc:
        return [str(exc)]
    return []


def write_default_files(directory: str | os.PathLike) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for model_id, (_, params_cls, stem) in _registry().items():
        path = directory / f"{stem}.ini"
        path.write_text(params_to_ini(params_cls(), model_id), encoding="utf-8", newline="\n")
        written.append(path)
    return written
