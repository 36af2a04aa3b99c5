from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConstantTarget, EmptyData, ShapeMismatch


@dataclass(frozen=True)
class Metrics:
    rmse: float
    r2: float


def metrics(y_true, y_pred) -> Metrics:
    """RMSE and coefficient of determination (1 - SSE/SST)."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.size != y_pred.size:
        raise ShapeMismatch("y_true and y_pred lengths differ")
    if y_true.size == 0:
        raise EmptyData("no values to score")
    sse = float(np.sum((y_true - y_pred) ** 2))
    sst = float(np.sum((y_true - y_true.mean()) ** 2))
    if sst == 0.0:
        raise ConstantTarget("r2 is undefined for a constant target")
    return Metrics(rmse=float(np.sqrt(sse / y_true.size)), r2=1.0 - sse / sst)
