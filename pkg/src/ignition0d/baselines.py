"""Interpolation baselines and error analysis for ignition maps.

Kernel ridge regression with an RBF kernel, a plain MLP regressor trained by
the same L-BFGS as the embedded networks, a from-scratch DBSCAN with
core/boundary/noise point types, and the evaluation metrics. The regressors
follow the scikit-learn estimator API (get_params/fit/predict) so they
compose with the wider ecosystem; inputs are min-max scaled to [0, 1] by the
laser-parameter ranges before either the kernel or the clustering distance
is applied.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator, ClusterMixin, RegressorMixin

from . import neural, optim, rng
from .autodiff import Tape, tanh as ad_tanh
from .errors import ContractError
from .neural import MlpSpec
from .pnode import ETA_RANGES
from .validation import as_1d_array, as_2d_array, check_fitted

DEFAULT_SCALE_RANGES = ETA_RANGES


def scale_rows(X, ranges) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    return (X - lo) / (hi - lo)


class RbfKernelRidge(RegressorMixin, BaseEstimator):
    """Kernel ridge regression with K(a, b) = exp(-gamma ||a - b||^2).

    The dual weights solve (K + ridge I) w = y by a dense Cholesky
    factorization. Duplicate rows (after scaling) are averaged before the
    solve so the system stays well-posed.
    """

    def __init__(self, ridge=2.0, gamma=1.0, scale_ranges=DEFAULT_SCALE_RANGES):
        self.ridge = ridge
        self.gamma = gamma
        self.scale_ranges = scale_ranges

    def _scale(self, X):
        if self.scale_ranges is None:
            return np.asarray(X, dtype=float)
        return scale_rows(X, self.scale_ranges)

    def fit(self, X, y):
        X = as_2d_array(X)
        y = as_1d_array(y, X.shape[0])
        Xs = self._scale(X)
        # average duplicates
        uniq, inverse = np.unique(Xs, axis=0, return_inverse=True)
        if uniq.shape[0] != Xs.shape[0]:
            sums = np.zeros(uniq.shape[0])
            counts = np.zeros(uniq.shape[0])
            np.add.at(sums, inverse, y)
            np.add.at(counts, inverse, 1.0)
            Xs, y = uniq, sums / counts
        K = rbf_kernel(Xs, Xs, self.gamma)
        K[np.diag_indices_from(K)] += self.ridge
        self.X_train_ = Xs
        self.dual_weights_ = cho_solve(cho_factor(K, lower=True), y)
        return self

    def predict(self, X):
        check_fitted(self, "dual_weights_")
        Xs = self._scale(as_2d_array(X, self.X_train_.shape[1]))
        return rbf_kernel(Xs, self.X_train_, self.gamma) @ self.dual_weights_


def rbf_kernel(A, B, gamma) -> np.ndarray:
    a2 = np.sum(A * A, axis=1)[:, None]
    b2 = np.sum(B * B, axis=1)[None, :]
    d2 = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * d2)


class MlpRegressor(RegressorMixin, BaseEstimator):
    """Feed-forward network regression of final temperature over eta.

    Deliberately the same network structure as the ones embedded in the
    reactor model, trained to convergence with the shared L-BFGS on the mean
    squared error. Inputs are min-max scaled; the target is scaled as
    (y - y_center) / y_scale (temperature convention: (T - 350)/1050).
    """

    def __init__(self, hidden=(300, 300), seed=0, max_iters=500, grad_tol=1e-8,
                 y_center=350.0, y_scale=1050.0, scale_ranges=DEFAULT_SCALE_RANGES):
        self.hidden = hidden
        self.seed = seed
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.y_center = y_center
        self.y_scale = y_scale
        self.scale_ranges = scale_ranges

    def _scale(self, X):
        if self.scale_ranges is None:
            return np.asarray(X, dtype=float)
        return scale_rows(X, self.scale_ranges)

    def fit(self, X, y):
        X = as_2d_array(X)
        y = as_1d_array(y, X.shape[0])
        Xs = self._scale(X)
        ys = (y - self.y_center) / self.y_scale
        spec = MlpSpec((X.shape[1], *self.hidden, 1))
        params = neural.init(spec, seed=self.seed)
        rows = [list(map(float, r)) for r in Xs]
        targets = [float(v) for v in ys]

        def objective(flat):
            tape = Tape()
            w = tape.parameters(flat)
            total = 0.0
            for row, t in zip(rows, targets):
                out = neural.forward(spec, w, row)[0]
                r = out - t
                total = total + r * r
            scale = 1.0 / len(rows)
            total = total * scale
            return total.value, np.asarray(tape.backward(total))

        result = optim.lbfgs(objective, params.flat, max_iters=self.max_iters,
                             grad_tol=self.grad_tol)
        self.spec_ = spec
        self.params_ = neural.unflatten(spec, result.x)
        self.optim_result_ = result
        return self

    def predict(self, X):
        check_fitted(self, "params_")
        Xs = self._scale(as_2d_array(X, self.spec_.layer_sizes[0]))
        out = np.empty(Xs.shape[0])
        vals = self.params_.values
        for i, row in enumerate(Xs):
            out[i] = neural.forward(self.spec_, vals, list(map(float, row)))[0]
        return out * self.y_scale + self.y_center


CORE, BOUNDARY, NOISE = "core", "boundary", "noise"


class Dbscan(ClusterMixin, BaseEstimator):
    """Density-based clustering with core/boundary/noise point types.

    A point is core if it has at least min_pts neighbors within eps
    (counting itself); a non-core point within eps of a core point is a
    boundary point of that core's cluster; everything else is noise.
    Cluster ids are deterministic: clusters are numbered by the lowest point
    index they contain.
    """

    def __init__(self, eps=0.15, min_pts=5, scale_ranges=DEFAULT_SCALE_RANGES):
        self.eps = eps
        self.min_pts = min_pts
        self.scale_ranges = scale_ranges

    def fit(self, X, y=None):
        X = as_2d_array(X)
        if not self.eps > 0.0:
            raise ContractError("eps must be > 0")
        if self.min_pts < 1:
            raise ContractError("min_pts must be >= 1")
        Xs = scale_rows(X, self.scale_ranges) if self.scale_ranges is not None \
            else X
        n = Xs.shape[0]
        d2 = np.sum((Xs[:, None, :] - Xs[None, :, :]) ** 2, axis=-1)
        within = d2 <= self.eps * self.eps
        neighbor_counts = within.sum(axis=1)
        is_core = neighbor_counts >= self.min_pts
        labels = np.full(n, -1, dtype=int)
        point_type = np.array([NOISE] * n, dtype=object)
        cluster = 0
        for i in range(n):
            if not is_core[i] or labels[i] >= 0:
                continue
            labels[i] = cluster
            frontier = [i]
            while frontier:
                j = frontier.pop()
                for k in np.nonzero(within[j])[0]:
                    if is_core[k]:
                        if labels[k] < 0:
                            labels[k] = cluster
                            frontier.append(int(k))
                    elif labels[k] < 0:
                        labels[k] = cluster
            cluster += 1
        for i in range(n):
            if is_core[i]:
                point_type[i] = CORE
            elif labels[i] >= 0:
                point_type[i] = BOUNDARY
        self.labels_ = labels
        self.point_type_ = point_type
        self.n_clusters_ = cluster
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


@dataclass
class EvalMetrics:
    mae: float
    mean_relative_error: float
    confusion: tuple   # ((true_ign & pred_ign, true_ign & pred_not),
    #                    (true_not & pred_ign, true_not & pred_not))

    def as_dict(self) -> dict:
        return {"MAE": self.mae, "MRE": self.mean_relative_error,
                "confusion": [list(r) for r in self.confusion]}


def metrics(pred, truth, ignition_threshold=1000.0) -> EvalMetrics:
    """MAE [K], mean relative error, and the 2x2 ignition confusion counts."""
    pred = as_1d_array(pred, name="pred")
    truth = as_1d_array(truth, name="truth")
    if pred.shape[0] != truth.shape[0]:
        raise ContractError("pred and truth must have equal length")
    if pred.shape[0] == 0:
        raise ContractError("metrics need at least one point")
    mae = float(np.mean(np.abs(pred - truth)))
    mre = float(np.mean(np.abs(pred - truth) / np.abs(truth)))
    ti = truth > ignition_threshold
    pi = pred > ignition_threshold
    confusion = ((int(np.sum(ti & pi)), int(np.sum(ti & ~pi))),
                 (int(np.sum(~ti & pi)), int(np.sum(~ti & ~pi))))
    return EvalMetrics(mae=mae, mean_relative_error=mre, confusion=confusion)


# -- model persistence for sweep/eval tooling ---------------------------

def save_krr(path, model: RbfKernelRidge):
    payload = {"kind": "krr", "ridge": model.ridge, "gamma": model.gamma,
               "scale_ranges": [list(r) for r in model.scale_ranges]
               if model.scale_ranges is not None else None,
               "X_train": model.X_train_.tolist(),
               "dual_weights": model.dual_weights_.tolist()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_krr(path) -> RbfKernelRidge:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    ranges = payload["scale_ranges"]
    model = RbfKernelRidge(ridge=payload["ridge"], gamma=payload["gamma"],
                           scale_ranges=None)
    model.X_train_ = np.array(payload["X_train"])
    model.dual_weights_ = np.array(payload["dual_weights"])
    # stored training rows are already scaled; keep scaling for new queries
    if ranges is not None:
        model.scale_ranges = tuple(tuple(r) for r in ranges)
    return model


def save_mlp(path, model: MlpRegressor):
    payload = {"kind": "mlp",
               "spec": {"layer_sizes": list(model.spec_.layer_sizes)},
               "flat": [float(v) for v in model.params_.flat],
               "seed": model.seed,
               "y_center": model.y_center, "y_scale": model.y_scale,
               "scale_ranges": [list(r) for r in model.scale_ranges]
               if model.scale_ranges is not None else None}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_mlp(path) -> MlpRegressor:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    ranges = payload["scale_ranges"]
    model = MlpRegressor(
        hidden=tuple(payload["spec"]["layer_sizes"][1:-1]), seed=payload["seed"],
        y_center=payload["y_center"], y_scale=payload["y_scale"],
        scale_ranges=tuple(tuple(r) for r in ranges) if ranges else None)
    model.spec_ = MlpSpec(tuple(payload["spec"]["layer_sizes"]))
    model.params_ = neural.unflatten(model.spec_, payload["flat"])
    return model
