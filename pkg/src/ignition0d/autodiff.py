"""Reverse-mode automatic differentiation on a scalar tape.

A ``Tape`` records one scalar operation per node: parent indices plus the
local partial derivatives, appended in execution order. ``backward`` runs a
single reverse sweep and returns the gradient with respect to every
``parameter`` node. Constants created with ``lift`` carry zero gradient.

The elementary-function helpers (``exp``, ``tanh``, ...) accept either a
``Var`` or a plain float and do the matching thing, so numerical code written
against them runs unchanged in fast float mode and in differentiable mode.

One tape belongs to one thread; parallelism is per-sample, one tape each.
"""
from __future__ import annotations

import math
import threading

__all__ = [
    "Tape", "Var", "TapeUsageError", "lift", "parameter", "backward",
    "exp", "log", "tanh", "softplus", "relu", "val",
]


class TapeUsageError(RuntimeError):
    """Raised for misuse of the tape API (no active tape, wrong tape, ...)."""


_local = threading.local()


def _tape_stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


class Var:
    """Scalar tracked on a tape: a value plus the index of its tape node."""

    __slots__ = ("tape", "value", "node_id")

    def __init__(self, tape, value, node_id):
        self.tape = tape
        self.value = value
        self.node_id = node_id

    def __repr__(self):
        return f"Var({self.value!r}, node={self.node_id})"

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        t = self.tape
        if type(other) is Var:
            return Var(t, self.value + other.value,
                       t._rec(self.node_id, other.node_id, 1.0, 1.0))
        return Var(t, self.value + other, t._rec(self.node_id, -1, 1.0, 0.0))

    __radd__ = __add__

    def __sub__(self, other):
        t = self.tape
        if type(other) is Var:
            return Var(t, self.value - other.value,
                       t._rec(self.node_id, other.node_id, 1.0, -1.0))
        return Var(t, self.value - other, t._rec(self.node_id, -1, 1.0, 0.0))

    def __rsub__(self, other):
        t = self.tape
        return Var(t, other - self.value, t._rec(self.node_id, -1, -1.0, 0.0))

    def __mul__(self, other):
        t = self.tape
        if type(other) is Var:
            return Var(t, self.value * other.value,
                       t._rec(self.node_id, other.node_id, other.value, self.value))
        return Var(t, self.value * other, t._rec(self.node_id, -1, other, 0.0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        t = self.tape
        if type(other) is Var:
            inv = 1.0 / other.value
            v = self.value * inv
            return Var(t, v, t._rec(self.node_id, other.node_id, inv, -v * inv))
        inv = 1.0 / other
        return Var(t, self.value * inv, t._rec(self.node_id, -1, inv, 0.0))

    def __rtruediv__(self, other):
        t = self.tape
        inv = 1.0 / self.value
        v = other * inv
        return Var(t, v, t._rec(self.node_id, -1, -v * inv, 0.0))

    def __pow__(self, p):
        t = self.tape
        if type(p) is Var:
            v = self.value ** p.value
            da = p.value * self.value ** (p.value - 1.0)
            db = v * math.log(self.value) if self.value > 0.0 else 0.0
            return Var(t, v, t._rec(self.node_id, p.node_id, da, db))
        if p == 2.0:  # common case in rate laws
            return Var(t, self.value * self.value,
                       t._rec(self.node_id, -1, 2.0 * self.value, 0.0))
        v = self.value ** p
        da = 0.0 if p == 0.0 else p * self.value ** (p - 1.0)
        return Var(t, v, t._rec(self.node_id, -1, da, 0.0))

    def __neg__(self):
        t = self.tape
        return Var(t, -self.value, t._rec(self.node_id, -1, -1.0, 0.0))


class Tape:
    """Append-only operation record; parents always precede children."""

    __slots__ = ("n", "p1", "p2", "d1", "d2", "param_ids", "nonfinite_count",
                 "last_backward_visits")

    def __init__(self):
        self.n = 0
        self.p1: list[int] = []
        self.p2: list[int] = []
        self.d1: list[float] = []
        self.d2: list[float] = []
        self.param_ids: list[int] = []
        self.nonfinite_count = 0
        self.last_backward_visits = 0

    def _rec(self, a: int, b: int, da: float, db: float) -> int:
        i = self.n
        self.n = i + 1
        self.p1.append(a)
        self.p2.append(b)
        self.d1.append(da)
        self.d2.append(db)
        return i

    # -- node creation ------------------------------------------------
    def lift(self, x: float) -> Var:
        """Constant node; receives no gradient."""
        return Var(self, float(x), self._rec(-1, -1, 0.0, 0.0))

    def parameter(self, x: float) -> Var:
        """Differentiable input; gradient is reported by ``backward``."""
        i = self._rec(-1, -1, 0.0, 0.0)
        self.param_ids.append(i)
        return Var(self, float(x), i)

    def parameters(self, xs) -> list[Var]:
        return [self.parameter(x) for x in xs]

    # -- context manager marks this tape active for lift()/parameter() --
    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack().pop()
        return False

    def backward(self, output: Var) -> list[float]:
        """Single reverse sweep; returns d(output)/d(param) per parameter node."""
        if type(output) is not Var:
            raise TapeUsageError("backward output must be a Var")
        if output.tape is not self:
            raise TapeUsageError("output does not belong to this tape")
        n = self.n
        adj = [0.0] * n
        adj[output.node_id] = 1.0
        p1, p2, d1, d2 = self.p1, self.p2, self.d1, self.d2
        visits = 0
        for i in range(n - 1, -1, -1):
            a = adj[i]
            visits += 1
            if a != 0.0:
                j = p1[i]
                if j >= 0:
                    adj[j] += a * d1[i]
                j = p2[i]
                if j >= 0:
                    adj[j] += a * d2[i]
        self.last_backward_visits = visits
        return [adj[i] for i in self.param_ids]


def _active_tape() -> Tape:
    stack = _tape_stack()
    if not stack:
        raise TapeUsageError("no active tape; use 'with Tape() as t:' or tape methods")
    return stack[-1]


def lift(x: float) -> Var:
    return _active_tape().lift(x)


def parameter(x: float) -> Var:
    return _active_tape().parameter(x)


def backward(tape: Tape, output: Var) -> list[float]:
    return tape.backward(output)


def val(x) -> float:
    """Plain float value of a Var or float."""
    return x.value if type(x) is Var else x


# -- elementary functions, float-or-Var -------------------------------

def exp(x):
    if type(x) is Var:
        t = x.tape
        v = math.exp(x.value) if x.value < 709.0 else math.inf
        if not math.isfinite(v):
            t.nonfinite_count += 1
        return Var(t, v, t._rec(x.node_id, -1, v, 0.0))
    return math.exp(x)


def log(x):
    if type(x) is Var:
        t = x.tape
        if x.value > 0.0:
            v = math.log(x.value)
        else:
            v = math.nan
            t.nonfinite_count += 1
        return Var(t, v, t._rec(x.node_id, -1, 1.0 / x.value if x.value != 0.0 else math.inf, 0.0))
    return math.log(x)


def tanh(x):
    if type(x) is Var:
        t = x.tape
        v = math.tanh(x.value)
        return Var(t, v, t._rec(x.node_id, -1, 1.0 - v * v, 0.0))
    return math.tanh(x)


def _softplus_value(x: float) -> float:
    if x > 30.0:
        return x
    if x < -30.0:
        return math.exp(x)
    return math.log1p(math.exp(x))


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        z = math.exp(-x)
        return 1.0 / (1.0 + z)
    z = math.exp(x)
    return z / (1.0 + z)


def softplus(x):
    """log(1 + exp(x)) with overflow-safe branches beyond |x| > 30."""
    if type(x) is Var:
        t = x.tape
        return Var(t, _softplus_value(x.value),
                   t._rec(x.node_id, -1, _sigmoid(x.value), 0.0))
    return _softplus_value(x)


def relu(x):
    """max(x, 0); subgradient 0 at x == 0."""
    if type(x) is Var:
        t = x.tape
        if x.value > 0.0:
            return Var(t, x.value, t._rec(x.node_id, -1, 1.0, 0.0))
        return Var(t, 0.0, t._rec(x.node_id, -1, 0.0, 0.0))
    return x if x > 0.0 else 0.0
