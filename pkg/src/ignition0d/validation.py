"""Small input-validation helpers for the estimator layer."""
from __future__ import annotations

import numpy as np


def as_2d_array(X, n_cols=None, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if n_cols is not None and X.shape[1] != n_cols:
        raise ValueError(f"{name} must have {n_cols} columns, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def as_1d_array(y, n=None, name="y") -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y


def check_fitted(estimator, attr: str):
    if not hasattr(estimator, attr):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first")
