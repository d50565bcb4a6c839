"""Fully connected feed-forward networks with a flat parameter-vector view.

Hidden layers use tanh, the output layer is affine. Parameters are stored
flat in a fixed layout: for each layer, the weight matrix row-major (one row
per output neuron) followed by that layer's bias vector. The forward pass is
written as explicit scalar loops so that evaluation on plain floats and on
autodiff ``Var``s follows the exact same arithmetic order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import math

import numpy as np

from . import rng
from .autodiff import tanh


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes [input, hidden..., output]; at least one hidden layer."""

    layer_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise ValueError("need at least one hidden layer")
        if any(s < 1 for s in sizes):
            raise ValueError("layer sizes must be >= 1")

    @property
    def n_params(self) -> int:
        return sum(a * b + b for a, b in zip(self.layer_sizes, self.layer_sizes[1:]))

    def layout(self):
        """(n_in, n_out, w_offset, b_offset) per layer."""
        out = []
        off = 0
        for a, b in zip(self.layer_sizes, self.layer_sizes[1:]):
            out.append((a, b, off, off + a * b))
            off += a * b + b
        return tuple(out)


@dataclass
class MlpParams:
    spec: MlpSpec
    flat: np.ndarray
    _values: list = field(default=None, repr=False)

    def __post_init__(self):
        self.flat = np.asarray(self.flat, dtype=float)
        if self.flat.shape != (self.spec.n_params,):
            raise ValueError(
                f"flat vector length {self.flat.shape} != {self.spec.n_params}")

    @property
    def values(self) -> list:
        """Parameters as a plain float list (fast scalar forward path)."""
        if self._values is None:
            self._values = [float(v) for v in self.flat]
        return self._values


def init(spec: MlpSpec, seed: int) -> MlpParams:
    """Xavier-uniform weights (limit sqrt(6/(n_in+n_out))), zero biases."""
    stream = rng.derive(seed)
    flat = np.zeros(spec.n_params)
    for n_in, n_out, w_off, b_off in spec.layout():
        limit = math.sqrt(6.0 / (n_in + n_out))
        for i in range(n_in * n_out):
            flat[w_off + i] = stream.uniform_in(-limit, limit)
        # biases stay zero
    return MlpParams(spec=spec, flat=flat)


def forward(spec: MlpSpec, weights, x) -> list:
    """Evaluate the network on scalar inputs (floats or Vars).

    ``weights`` is any indexable flat parameter sequence in the standard
    layout; mixing float weights with Var inputs (or vice versa) is fine.
    """
    layout = spec.layout()
    if len(x) != spec.layer_sizes[0]:
        raise ValueError(f"input length {len(x)} != {spec.layer_sizes[0]}")
    act = list(x)
    last = len(layout) - 1
    for li, (n_in, n_out, w_off, b_off) in enumerate(layout):
        nxt = [None] * n_out
        for j in range(n_out):
            row = w_off + j * n_in
            s = weights[row] * act[0]
            for i in range(1, n_in):
                s = s + weights[row + i] * act[i]
            s = s + weights[b_off + j]
            nxt[j] = s if li == last else tanh(s)
        act = nxt
    return act


def fprop(params: MlpParams, x) -> list:
    return forward(params.spec, params.values, x)


def flatten(params: MlpParams) -> np.ndarray:
    return params.flat.copy()


def unflatten(spec: MlpSpec, vector) -> MlpParams:
    return MlpParams(spec=spec, flat=np.array(vector, dtype=float))


def save_checkpoint(path, params: MlpParams, seed: int, scaling: dict):
    payload = {
        "spec": {"layer_sizes": list(params.spec.layer_sizes)},
        "flat": [float(v) for v in params.flat],
        "seed": int(seed),
        "scaling": scaling,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    spec = MlpSpec(tuple(payload["spec"]["layer_sizes"]))
    params = unflatten(spec, payload["flat"])
    return params, int(payload["seed"]), payload.get("scaling", {})
