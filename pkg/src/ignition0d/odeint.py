"""Fixed-step classical Runge-Kutta 4 integration.

The stepper is generic over the state: any sequence of scalars that support
arithmetic, which includes autodiff ``Var``s, so the same code path produces
plain trajectories and differentiable ones. No adaptivity; stiffness is
handled by the caller's choice of dt and surfaces as a divergence error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .autodiff import val
from .errors import IntegrationDivergedError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = t0 + i dt, i = 0..n_steps."""

    t0: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    def times(self) -> list:
        return [self.t0 + i * self.dt for i in range(self.n_steps + 1)]

    @property
    def t_end(self) -> float:
        return self.t0 + self.n_steps * self.dt


def _check_stage(k, stage, t):
    for component in k:
        if not math.isfinite(val(component)):
            raise IntegrationDivergedError(
                f"non-finite derivative in RK4 stage {stage} at t = {t!r}",
                t=t, stage=stage)


def rk4_step(f, y, t, dt):
    """One classical RK4 step from t to t + dt.

    y' = y + dt (k1 + 2 k2 + 2 k3 + k4) / 6 with the standard stage points.
    """
    n = len(y)
    k1 = f(y, t)
    _check_stage(k1, 1, t)
    half = dt * 0.5
    t_half = t + half
    y2 = [y[i] + half * k1[i] for i in range(n)]
    k2 = f(y2, t_half)
    _check_stage(k2, 2, t)
    y3 = [y[i] + half * k2[i] for i in range(n)]
    k3 = f(y3, t_half)
    _check_stage(k3, 3, t)
    y4 = [y[i] + dt * k3[i] for i in range(n)]
    k4 = f(y4, t + dt)
    _check_stage(k4, 4, t)
    return [y[i] + dt * ((k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0)
            for i in range(n)]


def integrate(f, state0, grid: TimeGrid) -> list:
    """Apply rk4_step over the grid; returns states at all n_steps+1 points."""
    states = [list(state0)]
    y = states[0]
    dt = grid.dt
    for i in range(grid.n_steps):
        t = grid.t0 + i * dt
        try:
            y = rk4_step(f, y, t, dt)
        except IntegrationDivergedError as exc:
            raise IntegrationDivergedError(
                f"{exc} (step {i})", t=exc.t, step=i, stage=exc.stage) from None
        states.append(y)
    return states
