"""Synthetic ground-truth generator for ignition-map experiments.

A hidden deposition law maps the six laser parameters to a total deposited
energy (Gaussian factors in kernel position, a penalty in coflow rate) and a
Gaussian-in-time pulse shape. Reference trajectories come from the reactor
with the scenario's baseline rate constants; the sharp ignition boundary is
produced by the chemistry's thermal runaway against the flow, not painted
into the map. All law constants are calibration choices of this package.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ContractError, IntegrationDivergedError
from .odeint import TimeGrid
from .pnode import ETA_NAMES, ETA_RANGES, LaserParams
from .reactor import Trajectory, simulate
from .scenario import Scenario, load_scenario


@dataclass(frozen=True)
class OracleLaw:
    """Coupling constants of the hidden deposition law."""

    q_scale: float = 1.2e7      # J, full-range energy scale (calibrated)
    x_opt: float = 3.0
    y_opt_base: float = 0.45
    y_opt_wiggle: float = 0.05
    sigma_x: float = 1.5
    r0: float = 0.12
    t0: float = 1.2e-4          # s, pulse center
    sigma_t0: float = 3.0e-5    # s, pulse width scale
    maf_penalty: float = 0.5

    def y_opt(self, x: float) -> float:
        return self.y_opt_base + self.y_opt_wiggle * math.sin(x)

    def sigma_t(self, eta: LaserParams) -> float:
        return self.sigma_t0 * (0.25 + eta.duration)

    def total_energy(self, eta: LaserParams) -> float:
        """E_tot(eta), J: separable Gaussian coupling times a MaF penalty."""
        gx = math.exp(-((eta.x - self.x_opt) ** 2) / (2.0 * self.sigma_x ** 2))
        sy = self.r0 + eta.radius
        gy = math.exp(-((eta.y - self.y_opt(eta.x)) ** 2) / (2.0 * sy * sy))
        maf_factor = 1.0 - self.maf_penalty * eta.MaF / 0.02
        return self.q_scale * eta.amplitude * gx * gy * maf_factor


def deposition_profile(law: OracleLaw, eta, grid: TimeGrid):
    """(rate_fn, E_tot): unit-mass Gaussian pulse renormalized on the grid.

    The Gaussian is truncated to the grid and renormalized by trapezoidal
    quadrature on the same grid, so integrating the returned rate over the
    grid recovers E_tot exactly.
    """
    eta = eta if isinstance(eta, LaserParams) else LaserParams.from_array(eta)
    e_tot = law.total_energy(eta)
    sig = law.sigma_t(eta)
    t0 = law.t0

    def gauss(t):
        z = (t - t0) / sig
        return math.exp(-0.5 * z * z)

    times = grid.times()
    z = 0.5 * (gauss(times[0]) + gauss(times[-1]))
    for t in times[1:-1]:
        z += gauss(t)
    z *= grid.dt
    scale = e_tot / z

    def rate(t):
        return scale * gauss(t)

    return rate, e_tot


def oracle_deposition(law: OracleLaw, eta, t: float, grid: TimeGrid) -> float:
    """Deposition rate at time t, W."""
    if t < 0.0:
        raise ContractError("deposition time must be >= 0")
    rate, _ = deposition_profile(law, eta, grid)
    return rate(t)


def oracle_trajectory(eta, scenario: Scenario = None,
                      law: OracleLaw = None) -> Trajectory:
    """Reference trajectory for one parameter vector.

    Runs the scenario reactor with its baseline rate constants and the
    hidden deposition law. Divergence here means the calibration is broken
    and is re-raised loudly.
    """
    scn = scenario if scenario is not None else load_scenario()
    oracle = law if law is not None else OracleLaw()
    eta = (eta if isinstance(eta, LaserParams)
           else LaserParams.from_array(eta)).require_in_range()
    rate, _ = deposition_profile(oracle, eta, scn.grid)
    A_base, E_base = scn.arrhenius_base()
    config = scn.config_for(eta.MaF)
    try:
        return simulate(config, scn.initial_state(), scn.grid, heat_fn=rate,
                        A_over=list(A_base), E_over=list(E_base))
    except IntegrationDivergedError as exc:
        raise IntegrationDivergedError(
            f"oracle diverged for eta = {tuple(eta.as_array())}: "
            f"{exc} (calibration failure)", t=exc.t, step=exc.step) from None


# Defaults for inactive dimensions when sampling subsets of the space.
def default_eta(law: OracleLaw = None) -> dict:
    oracle = law if law is not None else OracleLaw()
    return {"x": 3.0, "y": oracle.y_opt(3.0), "amplitude": 0.04,
            "radius": 0.25, "duration": 0.5, "MaF": 0.0}


@dataclass
class Dataset:
    """Observed (eta, T, Y_O2) traces on a shared observation grid."""

    seed: int
    scenario: str
    times: np.ndarray           # observation times, shared by all samples
    eta: np.ndarray             # (n, 6)
    T_obs: np.ndarray           # (n, n_obs)
    Y_obs: np.ndarray           # (n, n_obs) oxygen mass fraction
    obs_grid: TimeGrid = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.eta = np.asarray(self.eta, float).reshape(-1, 6)
        self.T_obs = np.asarray(self.T_obs, float)
        self.Y_obs = np.asarray(self.Y_obs, float)
        for row in self.eta:
            LaserParams.from_array(row).require_in_range()

    def __len__(self):
        return self.eta.shape[0]

    @property
    def final_T(self) -> np.ndarray:
        return self.T_obs[:, -1]

    def subset(self, indices) -> "Dataset":
        idx = list(indices)
        return Dataset(seed=self.seed, scenario=self.scenario, times=self.times,
                       eta=self.eta[idx], T_obs=self.T_obs[idx],
                       Y_obs=self.Y_obs[idx], obs_grid=self.obs_grid)

    def split(self, n_train: int, seed: int):
        """Deterministic shuffled split into (train, test)."""
        n = len(self)
        if not 0 < n_train <= n:
            raise ContractError(f"n_train must be in (0, {n}]")
        order = list(range(n))
        stream = rng.derive(seed, 0xC0FFEE)
        for i in range(n - 1, 0, -1):   # Fisher-Yates
            j = stream.next_u64() % (i + 1)
            order[i], order[j] = order[j], order[i]
        return self.subset(order[:n_train]), self.subset(order[n_train:])

    def save(self, path):
        grid = self.obs_grid
        payload = {
            "seed": int(self.seed),
            "scenario": self.scenario,
            "grid": {"t0": float(self.times[0]),
                     "dt": float(grid.dt if grid else
                                 (self.times[1] - self.times[0])),
                     "n": int(len(self.times) - 1)},
            "samples": [
                {"eta": [float(v) for v in self.eta[i]],
                 "T": [float(v) for v in self.T_obs[i]],
                 "Y_O2": [float(v) for v in self.Y_obs[i]]}
                for i in range(len(self))
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Dataset":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        grid = TimeGrid(t0=float(payload["grid"]["t0"]),
                        dt=float(payload["grid"]["dt"]),
                        n_steps=int(payload["grid"]["n"]))
        samples = payload["samples"]
        return cls(seed=int(payload["seed"]), scenario=payload["scenario"],
                   times=np.array(grid.times()),
                   eta=np.array([s["eta"] for s in samples]),
                   T_obs=np.array([s["T"] for s in samples]),
                   Y_obs=np.array([s["Y_O2"] for s in samples]),
                   obs_grid=grid)


def _draw_eta(stream: rng.SplitMix64, active: tuple, defaults: dict) -> list:
    row = []
    for name, (lo, hi) in zip(ETA_NAMES, ETA_RANGES):
        if name in active:
            row.append(stream.uniform_in(lo, hi))
        else:
            row.append(float(defaults[name]))
    return row


def _observe(traj: Trajectory, scenario: Scenario):
    obs = scenario.observation_grid()
    start = scenario.grid.n_steps - (obs.n_steps + 1) + 1
    idx = list(range(start, scenario.grid.n_steps + 1))
    o2 = traj.species_column("O2")
    return traj.T[idx], o2[idx]


def _gen_one(args):
    eta_row, scenario, law = args
    traj = oracle_trajectory(eta_row, scenario, law)
    T, Y = _observe(traj, scenario)
    return T, Y


def sample_dataset(n: int, seed: int, active_dims=ETA_NAMES,
                   scenario: Scenario = None, law: OracleLaw = None,
                   jobs: int = 1) -> Dataset:
    """n uniform draws over the active dimensions, observed on the shared grid.

    Inactive dimensions take the documented defaults. The PRNG is split per
    sample index, so parallel and serial generation produce identical data.
    """
    if n < 1:
        raise ContractError("need n >= 1 samples")
    scn = scenario if scenario is not None else load_scenario()
    oracle = law if law is not None else OracleLaw()
    active = tuple(active_dims)
    unknown = [d for d in active if d not in ETA_NAMES]
    if unknown:
        raise ContractError(f"unknown parameter dimensions {unknown}")
    defaults = default_eta(oracle)
    eta = np.array([_draw_eta(rng.derive(seed, i), active, defaults)
                    for i in range(n)])
    tasks = [(eta[i], scn, oracle) for i in range(n)]
    if jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_gen_one, tasks, chunksize=8))
    else:
        results = [_gen_one(t) for t in tasks]
    obs = scn.observation_grid()
    return Dataset(seed=seed, scenario=scn.name, times=np.array(obs.times()),
                   eta=eta, T_obs=np.array([r[0] for r in results]),
                   Y_obs=np.array([r[1] for r in results]), obs_grid=obs)


def sweep_grid(dims, fixed: dict = None, resolution: int = 30,
               law: OracleLaw = None) -> np.ndarray:
    """Row-major (resolution^2, 6) grid over two dimensions, others fixed."""
    d0, d1 = dims
    if d0 == d1:
        raise ContractError("sweep dimensions must be distinct")
    for d in (d0, d1):
        if d not in ETA_NAMES:
            raise ContractError(f"unknown parameter dimension '{d}'")
    defaults = default_eta(law)
    if fixed:
        defaults.update(fixed)
    i0, i1 = ETA_NAMES.index(d0), ETA_NAMES.index(d1)
    lo0, hi0 = ETA_RANGES[i0]
    lo1, hi1 = ETA_RANGES[i1]
    v0 = np.linspace(lo0, hi0, resolution)
    v1 = np.linspace(lo1, hi1, resolution)
    base = [defaults[name] for name in ETA_NAMES]
    out = np.tile(base, (resolution * resolution, 1))
    k = 0
    for a in v0:
        for b in v1:
            out[k, i0] = a
            out[k, i1] = b
            k += 1
    return out
