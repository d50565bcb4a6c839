import math

import pytest

from ignition0d.errors import IntegrationDivergedError
from ignition0d.odeint import TimeGrid, integrate, rk4_step


def test_zero_derivative_leaves_state():
    y = rk4_step(lambda y, t: [0.0, 0.0], [1.5, -2.25], 0.0, 0.125)
    assert y == [1.5, -2.25]


def test_constant_derivative_is_exact():
    # binary-exact dt and c
    y = rk4_step(lambda y, t: [0.5], [2.0], 0.0, 0.25)
    assert y[0] == 2.0 + 0.5 * 0.25


def test_exponential_single_step_frozen_value():
    # dy/dt = -y, y0 = 1, dt = 0.1: hand four-stage evaluation gives
    # k1=-1, k2=-0.95, k3=-0.9525, k4=-0.90475 -> y' = 0.9048375
    y = rk4_step(lambda y, t: [-y[0]], [1.0], 0.0, 0.1)
    assert y[0] == pytest.approx(0.9048375, abs=1e-15)
    assert abs(y[0] - math.exp(-0.1)) < 1e-7


def test_integrate_one_step_equals_rk4_step():
    grid = TimeGrid(t0=0.0, dt=0.1, n_steps=1)
    states = integrate(lambda y, t: [-y[0]], [1.0], grid)
    assert len(states) == 2
    assert states[1] == rk4_step(lambda y, t: [-y[0]], [1.0], 0.0, 0.1)


def _expm2(a, dt):
    """Series-evaluated matrix exponential of a 2x2 system (oracle)."""
    # exp(A dt) via plain Taylor series, summed to convergence
    A = [[a[0][0] * dt, a[0][1] * dt], [a[1][0] * dt, a[1][1] * dt]]
    E = [[1.0, 0.0], [0.0, 1.0]]
    term = [[1.0, 0.0], [0.0, 1.0]]
    for k in range(1, 40):
        term = [[(term[i][0] * A[0][j] + term[i][1] * A[1][j]) / k
                 for j in range(2)] for i in range(2)]
        E = [[E[i][j] + term[i][j] for j in range(2)] for i in range(2)]
    return E


def test_linear_system_matches_series_expm():
    a = [[-1.0, 0.4], [0.2, -0.7]]
    y0 = [1.0, -0.5]
    grid = TimeGrid(t0=0.0, dt=0.01, n_steps=100)
    states = integrate(lambda y, t: [a[0][0] * y[0] + a[0][1] * y[1],
                                     a[1][0] * y[0] + a[1][1] * y[1]], y0, grid)
    E = _expm2(a, 1.0)
    expected = [E[0][0] * y0[0] + E[0][1] * y0[1],
                E[1][0] * y0[0] + E[1][1] * y0[1]]
    assert states[-1][0] == pytest.approx(expected[0], rel=1e-9)
    assert states[-1][1] == pytest.approx(expected[1], rel=1e-9)


def _exp_error(dt):
    n = round(1.0 / dt)
    states = integrate(lambda y, t: [-y[0]], [1.0], TimeGrid(0.0, dt, n))
    return abs(states[-1][0] - math.exp(-1.0))


def test_fourth_order_convergence():
    ratio = _exp_error(0.1) / _exp_error(0.05)
    assert 14.0 <= ratio <= 18.0


def test_exact_on_cubic_polynomials():
    # dy/dt = 3 t^2 - 2 t + 4 -> y = t^3 - t^2 + 4 t
    states = integrate(lambda y, t: [3.0 * t * t - 2.0 * t + 4.0], [0.0],
                       TimeGrid(0.0, 0.25, 8))
    t = 2.0
    assert states[-1][0] == pytest.approx(t ** 3 - t ** 2 + 4.0 * t, rel=1e-14)


def test_deterministic_bitwise():
    grid = TimeGrid(0.0, 0.037, 50)
    f = lambda y, t: [math.sin(t) - 0.5 * y[0]]
    a = integrate(f, [0.3], grid)
    b = integrate(f, [0.3], grid)
    assert all(x[0] == y[0] for x, y in zip(a, b))


def test_nonfinite_stage_raises_with_stage_index():
    def f(y, t):
        return [float("nan")] if t > 0.0 else [1.0]
    with pytest.raises(IntegrationDivergedError) as err:
        rk4_step(f, [0.0], 0.0, 0.1)
    assert err.value.stage == 2   # first half step is the first t > 0

    with pytest.raises(IntegrationDivergedError, match="step"):
        integrate(f, [0.0], TimeGrid(0.0, 0.1, 3))


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.0, 5)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 0.1, 0)
    grid = TimeGrid(1.0, 0.5, 4)
    assert grid.times() == [1.0, 1.5, 2.0, 2.5, 3.0]
    assert grid.t_end == 3.0
