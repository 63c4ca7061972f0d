"""Forecast error metrics, computed on physical (inverse-scaled) values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


def _pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    yt = np.asarray(y_true, dtype=np.float64).ravel()
    yp = np.asarray(y_pred, dtype=np.float64).ravel()
    if yt.shape != yp.shape:
        raise ShapeError(f"metric operands must match, got {yt.shape} and {yp.shape}")
    if yt.size == 0:
        raise ValueError("metrics need at least one sample")
    return yt, yp


def mae(y_true, y_pred) -> float:
    yt, yp = _pair(y_true, y_pred)
    return float(np.mean(np.abs(yt - yp)))


def rmse(y_true, y_pred) -> float:
    yt, yp = _pair(y_true, y_pred)
    return float(np.sqrt(np.mean((yt - yp) ** 2)))


def mape(y_true, y_pred) -> float:
    """Mean absolute percentage error: (100 / n) * sum |(y - yhat) / y|."""
    yt, yp = _pair(y_true, y_pred)
    zero = np.flatnonzero(yt == 0.0)
    if zero.size:
        raise ValueError(f"mape undefined: y_true is zero at index {int(zero[0])}")
    return float(100.0 * np.mean(np.abs((yt - yp) / yt)))


@dataclass(frozen=True)
class EvalReport:
    mae: float
    rmse: float
    mape: float
    n: int


def evaluate(y_true, y_pred) -> EvalReport:
    yt, yp = _pair(y_true, y_pred)
    return EvalReport(mae=mae(yt, yp), rmse=rmse(yt, yp), mape=mape(yt, yp), n=int(yt.size))
