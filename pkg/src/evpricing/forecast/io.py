"""Versioned JSON documents for fitted regressors."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..dataio import ScalerParams
from ..errors import ArchitectureMismatch, MissingModel
from .gbt import GbtModel
from .mlp import MlpRegressor
from .poly import PolyModel

FORMAT = "evpricing.forecast"
VERSION = 1
_KINDS = {"gbt": GbtModel, "poly": PolyModel, "mlp": MlpRegressor}


def model_kind(model) -> str:
    for kind, cls in _KINDS.items():
        if isinstance(model, cls):
            return kind
    raise TypeError(f"cannot serialize {type(model).__name__}")


def dump_model(model, path, params: dict | None = None, scaler: ScalerParams | None = None,
               columns: list[str] | None = None) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "algorithm": model_kind(model),
        "params": params or {},
        "columns": columns,
        "scaler": None if scaler is None else {
            "names": list(scaler.names), "min": scaler.min.tolist(), "max": scaler.max.tolist()},
        "model": model.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_model(path):
    """Return (model, document); the document carries params, columns and scaler."""
    p = Path(path)
    if not p.is_file():
        raise MissingModel(f"no model file at {p}")
    doc = json.loads(p.read_text(encoding="utf-8"))
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise ArchitectureMismatch(f"{p}: unsupported model document")
    model = _KINDS[doc["algorithm"]].from_dict(doc["model"])
    return model, doc


def scaler_from_doc(doc: dict) -> ScalerParams | None:
    s = doc.get("scaler")
    if s is None:
        return None
    return ScalerParams(tuple(s["names"]), np.asarray(s["min"], dtype=float), np.asarray(s["max"], dtype=float))
