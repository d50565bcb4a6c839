"""Physics-based parameterized neural ODE for the stirred reactor.

Two small networks drive the reactor: ``shape_net(t, eta)`` gives the raw
heat-deposition shape over the time grid and ``param_net(eta)`` gives three
heads: the total deposited energy scale and log-scale corrections to the
Arrhenius pre-exponential factor and activation energy. The heat profile is
normalized so its trapezoidal integral over the grid equals the learned
total C(eta) by construction.

Trajectories are predicted by fixed-step RK4 through the reactor RHS;
training minimizes the weighted squared error over temperature and oxygen
mass-fraction observations (weight ``alpha_loss``), differentiated in
reverse mode through the whole solve, one tape per sample, and optimized
with L-BFGS.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import neural, optim
from .autodiff import Tape, Var, exp, softplus, val
from .errors import ContractError, IntegrationDivergedError, ThermoRangeError
from .neural import MlpParams, MlpSpec
from .odeint import TimeGrid
from .reactor import Trajectory, integrate_states, pressure_of, simulate
from .scenario import Scenario, load_scenario

log = logging.getLogger("ignition0d.pnode")

ETA_NAMES = ("x", "y", "amplitude", "radius", "duration", "MaF")
ETA_RANGES = ((0.0, 7.0), (0.0, 1.0), (0.0, 0.08),
              (0.0, 0.5), (0.0, 1.0), (0.0, 0.02))


@dataclass(frozen=True)
class LaserParams:
    """The six ignition parameters; all dimensionless."""

    x: float
    y: float
    amplitude: float
    radius: float
    duration: float
    MaF: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.amplitude, self.radius,
                         self.duration, self.MaF])

    @classmethod
    def from_array(cls, arr) -> "LaserParams":
        return cls(*map(float, arr))

    def require_in_range(self):
        for name, v, (lo, hi) in zip(ETA_NAMES, self.as_array(), ETA_RANGES):
            if not (lo <= v <= hi):
                raise ContractError(
                    f"laser parameter {name} = {v} outside [{lo}, {hi}]")
        return self


def scale_eta(eta) -> list:
    """Min-max scale the six components to [0, 1]."""
    arr = eta.as_array() if isinstance(eta, LaserParams) else np.asarray(eta, float)
    return [(float(v) - lo) / (hi - lo) for v, (lo, hi) in zip(arr, ETA_RANGES)]


@dataclass
class PnodeModel:
    shape_net: MlpParams        # inputs: scaled t plus scaled eta (7) -> 1
    param_net: MlpParams        # inputs: scaled eta (6) -> (c_raw, a_raw, e_raw)
    A0: float
    E0: float
    grid: TimeGrid
    alpha_loss: float = 1e7
    heat_scale: float = 1.0     # J, fixed energy scale inside C(eta)
    shape_gain: float = 8.0     # fixed gain ahead of the shape softplus
    a_clip: float = 3.0
    e_clip: float = 1.0
    seed: int = 0

    @property
    def n_params(self) -> int:
        return self.shape_net.spec.n_params + self.param_net.spec.n_params

    def flat(self) -> np.ndarray:
        return np.concatenate([self.shape_net.flat, self.param_net.flat])

    def with_flat(self, vector) -> "PnodeModel":
        vector = np.asarray(vector, float)
        ns = self.shape_net.spec.n_params
        return replace(self,
                       shape_net=neural.unflatten(self.shape_net.spec, vector[:ns]),
                       param_net=neural.unflatten(self.param_net.spec, vector[ns:]))


def new_model(scenario: Scenario = None, hidden=(300, 300), seed: int = 0,
              grid: TimeGrid = None) -> PnodeModel:
    """Freshly initialized model wired to a scenario's grid and rate baseline."""
    scn = scenario if scenario is not None else load_scenario()
    A_base, E_base = scn.arrhenius_base()
    shape_spec = MlpSpec((7, *hidden, 1))
    param_spec = MlpSpec((6, *hidden, 3))
    return PnodeModel(
        shape_net=neural.init(shape_spec, seed=seed),
        param_net=neural.init(param_spec, seed=seed + 1),
        A0=A_base[0], E0=E_base[0],
        grid=grid if grid is not None else scn.grid,
        alpha_loss=scn.alpha_loss,
        heat_scale=scn.heat_scale,
        seed=seed)


def _clip(x, lo, hi, counter=None):
    v = val(x)
    if v < lo or v > hi:
        if counter is not None:
            counter[0] += 1
        bound = lo if v < lo else hi
        return x.tape.lift(bound) if type(x) is Var else bound
    return x


def _heads(model: PnodeModel, eta, weights=None, clip_counter=None):
    """param_net heads -> (C total heat [J], A, E)."""
    w = weights if weights is not None else model.param_net.values
    c_raw, a_raw, e_raw = neural.forward(model.param_net.spec, w, scale_eta(eta))
    C = model.heat_scale * softplus(c_raw)
    A = model.A0 * exp(_clip(a_raw, -model.a_clip, model.a_clip, clip_counter))
    E = model.E0 * exp(_clip(e_raw, -model.e_clip, model.e_clip, clip_counter))
    return C, A, E


def _shape_samples(model: PnodeModel, eta, weights=None):
    # The fixed gain puts the softplus in its multiplicative regime, so the
    # network can express pulse-like profiles without huge weights.
    w = weights if weights is not None else model.shape_net.values
    spec = model.shape_net.spec
    gain = model.shape_gain
    s_eta = scale_eta(eta)
    t_end = model.grid.t_end
    out = []
    for t in model.grid.times():
        raw = neural.forward(spec, w, [t / t_end, *s_eta])[0]
        out.append(softplus(raw * gain))
    return out


def heat_profile(model: PnodeModel, eta, shape_weights=None, C=None,
                 param_weights=None):
    """Deposition rate sampled on the model grid, W.

    Normalized by the trapezoidal rule on the same grid:
    trapz(result) == C(eta) by construction.
    """
    if model.grid.n_steps < 1:
        raise ContractError("heat profile needs a grid with >= 2 points")
    q = _shape_samples(model, eta, shape_weights)
    dt = model.grid.dt
    z = q[0] * 0.5
    for i in range(1, len(q) - 1):
        z = z + q[i]
    z = (z + q[-1] * 0.5) * dt
    if C is None:
        C, _, _ = _heads(model, eta, param_weights)
    scale = C / z
    return [qi * scale for qi in q]


def effective_arrhenius(model: PnodeModel, eta):
    """(A, E) after the learned log-scale corrections, positive by construction."""
    _, A, E = _heads(model, eta)
    return A, E


def _heat_interp(samples, grid: TimeGrid):
    t0, dt, n = grid.t0, grid.dt, grid.n_steps

    def fn(t):
        s = (t - t0) / dt
        i = int(s)
        if i < 0:
            return samples[0]
        if i >= n:
            return samples[n]
        w = s - i
        a = samples[i]
        return a + (samples[i + 1] - a) * w

    return fn


def predict(model: PnodeModel, eta, config, state0) -> Trajectory:
    """Simulated trajectory under the model's heat profile and rate constants."""
    eta = eta if isinstance(eta, LaserParams) else LaserParams.from_array(eta)
    C, A, E = _heads(model, eta)
    samples = heat_profile(model, eta, C=C)
    n_rxn = len(config.mech.reactions)
    try:
        return simulate(config, state0, model.grid,
                        heat_fn=_heat_interp(samples, model.grid),
                        A_over=[A] * n_rxn, E_over=[E] * n_rxn)
    except IntegrationDivergedError as exc:
        raise IntegrationDivergedError(
            f"{exc} for eta = {tuple(eta.as_array())}",
            t=exc.t, step=exc.step, stage=exc.stage) from None


def _obs_indices(grid: TimeGrid, times) -> list:
    tol = 1e-9 * max(1.0, abs(grid.t_end))
    grid_times = grid.times()
    out = []
    for t in times:
        i = int(round((t - grid.t0) / grid.dt))
        if i < 0 or i >= len(grid_times) or abs(grid_times[i] - t) > tol:
            raise ContractError(
                f"observation time {t!r} is not on the model grid "
                f"(no silent interpolation)")
        out.append(i)
    return out


class _SampleProblem:
    """Per-sample reactor setup shared by the float and taped loss paths."""

    __slots__ = ("eta", "config", "y0", "obs_idx", "T_obs", "Y_obs", "o2_slot")

    def __init__(self, scenario: Scenario, grid: TimeGrid, eta_row, times,
                 T_obs, Y_obs):
        self.eta = LaserParams.from_array(eta_row)
        self.config = scenario.config_for(self.eta.MaF)
        state0 = scenario.initial_state()
        self.y0 = [state0.m, *state0.Y, state0.T]
        self.obs_idx = _obs_indices(grid, times)
        self.T_obs = [float(v) for v in T_obs]
        self.Y_obs = [float(v) for v in Y_obs]
        self.o2_slot = 1 + scenario.mech.index("O2")


def _sample_problems(model: PnodeModel, dataset, scenario: Scenario) -> list:
    return [
        _SampleProblem(scenario, model.grid, dataset.eta[i], dataset.times,
                       dataset.T_obs[i], dataset.Y_obs[i])
        for i in range(len(dataset.eta))
    ]


def _sample_loss(model: PnodeModel, prob: _SampleProblem, shape_w, param_w,
                 clip_counter=None):
    """Loss contribution of one sample; Var weights give a taped evaluation."""
    C, A, E = _heads(model, prob.eta, param_w, clip_counter)
    samples = heat_profile(model, prob.eta, shape_weights=shape_w, C=C)
    n_rxn = len(prob.config.mech.reactions)
    _, states = integrate_states(
        prob.config, prob.y0, model.grid,
        heat_fn=_heat_interp(samples, model.grid),
        A_over=[A] * n_rxn, E_over=[E] * n_rxn)
    n = len(prob.config.mech.species)
    alpha = model.alpha_loss
    total = 0.0
    for j, gi in enumerate(prob.obs_idx):
        state = states[gi]
        dT = state[1 + n] - prob.T_obs[j]
        dY = state[prob.o2_slot] - prob.Y_obs[j]
        total = total + (dT * dT + alpha * (dY * dY))
    return total


_PHYSICS_ERRORS = (IntegrationDivergedError, ThermoRangeError, OverflowError,
                   ZeroDivisionError)


def loss(model: PnodeModel, dataset, scenario: Scenario = None) -> float:
    """Plain-float evaluation of the training objective."""
    scn = scenario if scenario is not None else load_scenario()
    total = 0.0
    for prob in _sample_problems(model, dataset, scn):
        total += _sample_loss(model, prob, model.shape_net.values,
                              model.param_net.values)
    return total


def _taped_sample(model, prob, flat):
    """(loss, grad) of one sample on its own tape."""
    ns = model.shape_net.spec.n_params
    tape = Tape()
    weights = tape.parameters(flat)
    try:
        out = _sample_loss(model, prob, weights[:ns], weights[ns:])
    except _PHYSICS_ERRORS:
        return math.inf, None
    if not math.isfinite(out.value):
        return math.inf, None
    return out.value, tape.backward(out)


# Worker-global state for process-parallel gradient evaluation.
_WORKER = {}


def _worker_init(model, problems):
    _WORKER["model"] = model
    _WORKER["problems"] = problems


def _worker_eval(args):
    lo, hi, flat = args
    model, problems = _WORKER["model"], _WORKER["problems"]
    return [_taped_sample(model, problems[i], flat) for i in range(lo, hi)]


class _Objective:
    """Summed loss and gradient over the dataset, optionally process-parallel."""

    def __init__(self, model: PnodeModel, dataset, scenario: Scenario, jobs=1):
        self.model = model
        self.problems = _sample_problems(model, dataset, scenario)
        self.jobs = max(1, int(jobs))
        self.pool = None
        if self.jobs > 1 and len(self.problems) > 1:
            self.pool = ProcessPoolExecutor(
                max_workers=self.jobs, initializer=_worker_init,
                initargs=(model, self.problems))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    def __call__(self, flat):
        n = len(self.problems)
        if self.pool is None:
            results = [_taped_sample(self.model, p, flat) for p in self.problems]
        else:
            bounds = np.linspace(0, n, self.jobs + 1).astype(int)
            chunks = [(int(a), int(b), flat) for a, b in zip(bounds, bounds[1:])
                      if b > a]
            results = []
            for part in self.pool.map(_worker_eval, chunks):
                results.extend(part)
        total = 0.0
        grad = np.zeros(self.model.n_params)
        for f, g in results:   # strict sample order: jobs-count independent
            if g is None:
                return math.inf, grad
            total += f
            grad += np.asarray(g)
        return total, grad


def grad_loss(model: PnodeModel, dataset, scenario: Scenario = None, jobs=1):
    """(loss, gradient over the flat shape||param parameter vector)."""
    scn = scenario if scenario is not None else load_scenario()
    obj = _Objective(model, dataset, scn, jobs=jobs)
    try:
        f, g = obj(model.flat())
    finally:
        obj.close()
    if not math.isfinite(f):
        raise ContractError("non-finite loss at the supplied parameters")
    return f, g


@dataclass
class TrainOptions:
    max_iters: int = 200
    grad_tol: float = 1e-6
    jobs: int = 1


def train(model: PnodeModel, dataset, opts: TrainOptions = None,
          scenario: Scenario = None, callback=None):
    """L-BFGS training; returns (trained model, OptimResult)."""
    if len(dataset.eta) == 0:
        raise ContractError("training needs a nonempty dataset")
    opts = opts or TrainOptions()
    scn = scenario if scenario is not None else load_scenario()
    obj = _Objective(model, dataset, scn, jobs=opts.jobs)
    try:
        result = optim.lbfgs(obj, model.flat(), max_iters=opts.max_iters,
                             grad_tol=opts.grad_tol, memory=10,
                             c1=1e-4, c2=0.9, callback=callback)
    finally:
        obj.close()
    trained = model.with_flat(result.x)
    log.info("training finished: status=%s iters=%d loss=%.6g",
             result.status, result.n_iters, result.loss)
    return trained, result


# -- checkpoint IO ------------------------------------------------------

def _scaling_dict(model: PnodeModel) -> dict:
    return {"eta_ranges": [list(r) for r in ETA_RANGES],
            "t_scale": model.grid.t_end}


def save_checkpoint(path, model: PnodeModel):
    payload = {
        "kind": "pnode",
        "shape_net": {"spec": {"layer_sizes": list(model.shape_net.spec.layer_sizes)},
                      "flat": [float(v) for v in model.shape_net.flat],
                      "seed": model.seed,
                      "scaling": _scaling_dict(model)},
        "param_net": {"spec": {"layer_sizes": list(model.param_net.spec.layer_sizes)},
                      "flat": [float(v) for v in model.param_net.flat],
                      "seed": model.seed + 1,
                      "scaling": _scaling_dict(model)},
        "A0": model.A0,
        "E0": model.E0,
        "grid": {"t0": model.grid.t0, "dt": model.grid.dt,
                 "n_steps": model.grid.n_steps},
        "alpha_loss": model.alpha_loss,
        "heat_scale": model.heat_scale,
        "a_clip": model.a_clip,
        "e_clip": model.e_clip,
        "scaling": _scaling_dict(model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> PnodeModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("kind") != "pnode":
        raise ContractError(f"{path} is not a pnode checkpoint")

    def net(blob):
        spec = MlpSpec(tuple(blob["spec"]["layer_sizes"]))
        return neural.unflatten(spec, blob["flat"])

    grid = TimeGrid(t0=float(payload["grid"]["t0"]), dt=float(payload["grid"]["dt"]),
                    n_steps=int(payload["grid"]["n_steps"]))
    return PnodeModel(
        shape_net=net(payload["shape_net"]),
        param_net=net(payload["param_net"]),
        A0=float(payload["A0"]), E0=float(payload["E0"]), grid=grid,
        alpha_loss=float(payload["alpha_loss"]),
        heat_scale=float(payload.get("heat_scale", 1.0)),
        a_clip=float(payload.get("a_clip", 3.0)),
        e_clip=float(payload.get("e_clip", 1.0)),
        seed=int(payload["shape_net"].get("seed", 0)))
