"""Random walk with drift and VAR(1) reference forecasters."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .errors import DimensionError, DomainError, FitError

__all__ = [
    "RwModel",
    "VarModel",
    "fit_rw",
    "predict_rw",
    "fit_var1",
    "predict_var1",
    "to_direction",
]


def to_direction(x) -> np.ndarray:
    """1 for ``x >= 0`` and 0 otherwise; ties go up."""
    return (np.asarray(x) >= 0).astype(np.int8)


def _series(series, min_rows: int) -> np.ndarray:
    y = np.asarray(series, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2:
        raise DimensionError(f"series must be (T, n), got shape {y.shape}")
    if y.shape[0] < min_rows:
        raise DomainError(f"need at least {min_rows} rows, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise DomainError("series contains non-finite values")
    return y


@dataclass(frozen=True, eq=False)
class RwModel:
    drift: np.ndarray

    def to_csv(self, path: str | PathLike, names=None) -> None:
        names = names or [f"y{i}" for i in range(len(self.drift))]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "drift"])
            for name, d in zip(names, self.drift):
                w.writerow([name, repr(float(d))])


def fit_rw(series) -> RwModel:
    """Drift as the mean first difference of each column (the Gaussian MLE)."""
    y = _series(series, 2)
    return RwModel(drift=np.diff(y, axis=0).mean(axis=0))


def predict_rw(model: RwModel, y_t):
    """One-step forecast ``y_t + drift`` and the direction of the drift."""
    y_t = np.asarray(y_t, dtype=np.float64)
    if y_t.shape[-1] != model.drift.shape[0]:
        raise DimensionError(f"expected {model.drift.shape[0]} series, got {y_t.shape[-1]}")
    return y_t + model.drift, np.broadcast_to(to_direction(model.drift), y_t.shape).copy()


@dataclass(frozen=True, eq=False)
class VarModel:
    c: np.ndarray
    A1: np.ndarray
    ridge: float = 0.0

    def to_csv(self, path: str | PathLike, names=None) -> None:
        n = len(self.c)
        names = names or [f"y{i}" for i in range(n)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "c", *(f"A1_{name}" for name in names)])
            for i, name in enumerate(names):
                w.writerow([name, repr(float(self.c[i])), *(repr(float(a)) for a in self.A1[i])])


def fit_var1(series) -> VarModel:
    """OLS fit of ``y_t = c + A1 y_{t-1} + e_t``, one regression per equation.

    A rank-deficient regressor matrix falls back to ridge regression with
    penalty ``1e-8 * trace(X'X) / k`` and emits a warning.
    """
    y = _series(series, 2)
    T, n = y.shape
    if T < n + 2:
        raise FitError(f"VAR(1) on {n} series needs at least {n + 2} rows, got {T}")
    X = np.hstack([np.ones((T - 1, 1)), y[:-1]])
    Y = y[1:]
    ridge = 0.0
    if np.linalg.matrix_rank(X) < X.shape[1]:
        XtX = X.T @ X
        ridge = 1e-8 * np.trace(XtX) / X.shape[1]
        warnings.warn(f"rank-deficient VAR(1) regressors; using ridge penalty {ridge:.3g}", stacklevel=2)
        B = np.linalg.solve(XtX + ridge * np.eye(X.shape[1]), X.T @ Y)
    else:
        B, *_ = np.linalg.lstsq(X, Y, rcond=None)
    if not np.all(np.isfinite(B)):
        raise FitError("VAR(1) coefficients are not finite")
    return VarModel(c=B[0].copy(), A1=B[1:].T.copy(), ridge=ridge)


def predict_var1(model: VarModel, y_prev, reference=0.0):
    """Forecast ``c + A1 y_prev``; direction is ``forecast - reference >= 0``."""
    y_prev = np.asarray(y_prev, dtype=np.float64)
    if y_prev.shape[-1] != model.c.shape[0]:
        raise DimensionError(f"expected {model.c.shape[0]} series, got {y_prev.shape[-1]}")
    forecast = model.c + y_prev @ model.A1.T
    return forecast, to_direction(forecast - reference)
