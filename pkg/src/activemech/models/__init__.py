"""Registry of force-generation models keyed by their short identifiers."""

from __future__ import annotations

from ..core import MinimalModel, MinimalModelParams
from .l17 import L17Model, L17Params
from .nhs06 import NHS06Model, NHS06Params
from .rdq20 import RDQ20Model, RDQ20Params

# model id -> (model class, parameter class, parameter-file stem)
REGISTRY = {
    "MDM": (MinimalModel, MinimalModelParams, "mdm"),
    "NHS06": (NHS06Model, NHS06Params, "nhs06"),
    "L17": (L17Model, L17Params, "l17"),
    "RDQ20-MF": (RDQ20Model, RDQ20Params, "rdq20"),
}

MODEL_IDS = tuple(REGISTRY)


def build_model(model_id: str, params=None, stepper: str | None = None):
    """Instantiate a registered model; ``params`` defaults to the shipped parameter file."""
    if model_id not in REGISTRY:
        raise KeyError(f"unknown model {model_id!r}; known: {', '.join(MODEL_IDS)}")
    cls, _, _ = REGISTRY[model_id]
    if params is None:
        from ..params import load_params

        params = load_params(model_id)
    if model_id == "L17":
        return cls(params, stepper=stepper or "implicit")
    if stepper not in (None, cls.stepper):
        raise ValueError(f"model {model_id} only provides the {cls.stepper!r} inner stepper")
    return cls(params)


__all__ = [
    "REGISTRY",
    "MODEL_IDS",
    "build_model",
    "MinimalModel",
    "MinimalModelParams",
    "NHS06Model",
    "NHS06Params",
    "L17Model",
    "L17Params",
    "RDQ20Model",
    "RDQ20Params",
]
