"""Exhaustive hyperparameter search on a chronological hold-out split."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Mapping, Sequence

import numpy as np

from ..errors import EvPricingError, ShapeMismatch
from .gbt import fit_gbt
from .metrics import Metrics, metrics
from .mlp import MlpRegressor
from .poly import fit_poly

log = logging.getLogger(__name__)

Algorithm = Literal["gbt", "poly", "mlp"]
ALGORITHMS = ("gbt", "poly", "mlp")
METRICS_HEADER = ("algorithm", "params", "rmse", "r2")

GBT_GRID = {"rounds": [50, 70, 100, 150, 200], "max_depth": [3, 5, 7], "learning_rate": [0.01, 0.1, 0.2]}
MLP_GRID = {"hidden": [[50], [100], [50, 50], [16, 8], [16, 8, 4]], "l2": [1e-4, 1e-3],
            "learning_rate": ["constant", "adaptive"]}
POLY_GRID = {"degree": [2]}
DEFAULT_GRIDS = {"gbt": GBT_GRID, "poly": POLY_GRID, "mlp": MLP_GRID}


@dataclass
class Cell:
    params: dict
    metrics: Metrics | None = None
    error: str | None = None


@dataclass
class GridResult:
    algorithm: str
    cells: list[Cell]
    best_index: int | None
    best_model: Any = field(default=None, repr=False)

    @property
    def best(self) -> Cell:
        if self.best_index is None:
            raise EvPricingError(f"every {self.algorithm} grid cell failed")
        return self.cells[self.best_index]

    @property
    def best_params(self) -> dict:
        return self.best.params

    def rows(self):
        for c in self.cells:
            rmse = "" if c.metrics is None else repr(c.metrics.rmse)
            r2 = "" if c.metrics is None else repr(c.metrics.r2)
            yield self.algorithm, json.dumps(c.params, sort_keys=True), rmse, r2


def write_metrics_csv(results: Sequence[GridResult], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in results:
            w.writerows(r.rows())


def chronological_split(X, y, split_fraction: float):
    """Hold out the last ``split_fraction`` of rows."""
    if not 0.0 < split_fraction < 1.0:
        raise ValueError("split_fraction must lie in (0, 1)")
    n = len(y)
    cut = n - int(round(split_fraction * n))
    if cut < 1 or cut >= n:
        raise ShapeMismatch("split leaves an empty train or hold-out part")
    return X[:cut], y[:cut], X[cut:], y[cut:]


def expand_grid(grid: Mapping[str, Sequence]) -> list[dict]:
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("parameter grid must be non-empty")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _fit(algorithm: str, params: dict, X, y, seed: int):
    if algorithm == "gbt":
        return fit_gbt(X, y, **params)
    if algorithm == "poly":
        return fit_poly(X, y, **params)
    if algorithm == "mlp":
        p = dict(params)
        if "hidden" in p:
            p["hidden"] = tuple(np.atleast_1d(p["hidden"]).tolist())
        return MlpRegressor(seed=seed, **p).fit(X, y)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def grid_search(algorithm: Algorithm, param_grid: Mapping[str, Sequence], X, y,
                split_fraction: float = 0.2, seed: int = 0) -> GridResult:
    """Score every grid cell on the hold-out part and keep the lowest RMSE.

    The first cell wins ties. Cells whose fit raises a package error are
    recorded with the error text and skipped. For GBT, cells that differ
    only in ``rounds`` share one fit: the prediction after k rounds of a
    longer run is exactly the k-round model.
    """
    X = np.asarray(getattr(X, "values", X), dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    Xtr, ytr, Xte, yte = chronological_split(X, y, split_fraction)
    cells = [Cell(p) for p in expand_grid(param_grid)]
    models: list[Any] = [None] * len(cells)

    if algorithm == "gbt" and "rounds" in param_grid:
        groups: dict[str, list[int]] = {}
        for i, c in enumerate(cells):
            key = json.dumps({k: v for k, v in c.params.items() if k != "rounds"}, sort_keys=True)
            groups.setdefault(key, []).append(i)
        for members in groups.values():
            top = max(int(cells[i].params["rounds"]) for i in members)
            params = dict(cells[members[0]].params, rounds=top)
            try:
                full = _fit("gbt", params, Xtr, ytr, seed)
            except (EvPricingError, ValueError) as exc:
                for i in members:
                    cells[i].error = f"{type(exc).__name__}: {exc}"
                continue
            for i in members:
                models[i] = full.truncated(int(cells[i].params["rounds"]))
    for i, c in enumerate(cells):
        if c.error is not None:
            continue
        try:
            if models[i] is None:
                models[i] = _fit(algorithm, c.params, Xtr, ytr, seed)
            c.metrics = metrics(yte, models[i].predict(Xte))
        except (EvPricingError, ValueError) as exc:
            c.error = f"{type(exc).__name__}: {exc}"
            log.warning("%s cell %s failed: %s", algorithm, c.params, c.error)

    best = None
    for i, c in enumerate(cells):
        if c.metrics is not None and (best is None or c.metrics.rmse < cells[best].metrics.rmse):
            best = i
    return GridResult(algorithm, cells, best, models[best] if best is not None else None)
