"""Constant-volume well-stirred reactor: mass, species and energy balances.

State vector for integration is (m, Y_1..Y_n, T); pressure is derived from
the ideal-gas law, never integrated. The balances, with Y_k,out = Y_k for a
perfectly stirred outflow:

    dm/dt      = sum_in mdot_in - mdot_out
    m dY_k/dt  = sum_in mdot_in (Y_k,in - Y_k) + V omega_k W_k
    m c_v dT/dt = q_dep + sum_in mdot_in (h_in - sum_k u_k Y_k,in)
                  - mdot_out (p V / m) - sum_k V omega_k W_k u_k

Sign convention: q_dep is a non-negative heat *deposition* rate entering
with a plus sign (a heat-loss convention would flip it). The outlet is a
linear valve, mdot_out = K_v max(0, p - p_ambient).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import relu, val
from .constants import R_UNIVERSAL
from .errors import ContractError, ThermoRangeError
from .kinetics import Diagnostics, Mechanism, net_production_rates
from .odeint import TimeGrid, rk4_step
from .thermo import _cp_from, _h_from


def _as_schedule(mdot):
    """Constant or (times, values) piecewise-linear tabulated flow rate."""
    if isinstance(mdot, (int, float)):
        if mdot < 0.0:
            raise ContractError("inlet mdot must be >= 0")
        return float(mdot)
    times, values = mdot
    times = tuple(float(t) for t in times)
    values = tuple(float(v) for v in values)
    if len(times) != len(values) or len(times) < 2:
        raise ContractError("tabulated mdot needs matching times/values, >= 2 points")
    if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
        raise ContractError("tabulated mdot times must be strictly increasing")
    if any(v < 0.0 for v in values):
        raise ContractError("inlet mdot must be >= 0")
    return (times, values)


def _schedule_rate(schedule, t: float) -> float:
    if isinstance(schedule, float):
        return schedule
    times, values = schedule
    if t <= times[0]:
        return values[0]
    if t >= times[-1]:
        return values[-1]
    for i in range(len(times) - 1):
        if t <= times[i + 1]:
            w = (t - times[i]) / (times[i + 1] - times[i])
            return values[i] + w * (values[i + 1] - values[i])
    return values[-1]


@dataclass(frozen=True)
class ReactorState:
    m: float
    T: float
    Y: tuple

    def __post_init__(self):
        object.__setattr__(self, "Y", tuple(float(y) for y in self.Y))
        if not self.m > 0.0:
            raise ContractError("reactor mass must be > 0")
        if not self.T > 0.0:
            raise ContractError("temperature must be > 0")
        if abs(sum(self.Y) - 1.0) >= 1e-9:
            raise ContractError("mass fractions must sum to 1")


@dataclass(frozen=True)
class Inlet:
    """Feed stream: constant or tabulated mdot, fixed composition and temperature."""

    mdot: object
    Y_in: tuple
    T_in: float

    def __post_init__(self):
        object.__setattr__(self, "mdot", _as_schedule(self.mdot))
        object.__setattr__(self, "Y_in", tuple(float(y) for y in self.Y_in))
        if abs(sum(self.Y_in) - 1.0) >= 1e-9:
            raise ContractError("inlet composition must sum to 1")

    def rate(self, t: float) -> float:
        return _schedule_rate(self.mdot, t)


@dataclass(frozen=True)
class Outlet:
    """Linear valve against a fixed ambient pressure."""

    K_v: float = 0.0          # kg/(s*Pa)
    p_ambient: float = 101325.0

    def __post_init__(self):
        if self.K_v < 0.0:
            raise ContractError("valve coefficient must be >= 0")


@dataclass(frozen=True)
class ReactorConfig:
    V: float
    inlets: tuple
    outlet: Outlet
    mech: Mechanism
    # per-inlet (species index, Y_in) pairs, precomputed
    _inlet_terms: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.V > 0.0:
            raise ContractError("reactor volume must be > 0")
        object.__setattr__(self, "inlets", tuple(self.inlets))
        for inlet in self.inlets:
            if len(inlet.Y_in) != len(self.mech.species):
                raise ContractError("inlet composition length != species count")
        object.__setattr__(self, "_inlet_terms", tuple(
            tuple((k, y) for k, y in enumerate(inlet.Y_in) if y != 0.0)
            for inlet in self.inlets))


def pressure_of(config: ReactorConfig, m, T, Y):
    inv_W = 0.0
    for sp, y in zip(config.mech.species, Y):
        inv_W = inv_W + y * (1.0 / sp.W)
    return m * (R_UNIVERSAL / config.V) * T * inv_W


def outflow_rate(config: ReactorConfig, state: ReactorState) -> float:
    """Valve flow K_v max(0, p - p_ambient), kg/s."""
    p = pressure_of(config, state.m, state.T, state.Y)
    return config.outlet.K_v * relu(p - config.outlet.p_ambient)


def _inlet_enthalpy(config: ReactorConfig, inlet: Inlet) -> float:
    """Mass-specific enthalpy of a feed stream at its own temperature, J/kg."""
    h = 0.0
    for k, y in enumerate(inlet.Y_in):
        if y != 0.0:
            sp = config.mech.species[k]
            t = inlet.T_in
            if not (sp.T_min <= t <= sp.T_max):
                raise ContractError(
                    f"inlet temperature {t} outside range of '{sp.name}'")
            c = sp._h_lo if t <= sp.T_mid else sp._h_hi
            h += y * _h_from(c, t) / sp.W
    return h


def rhs(state, t, config: ReactorConfig, qdot_dep=0.0,
        A_over=None, E_over=None, diag: Diagnostics = None) -> dict:
    """Time derivatives {dm_dt, dY_dt, dT_dt} of a validated reactor state."""
    y_vec = [state.m, *state.Y, state.T]
    ctx = _RhsContext(config, None, A_over, E_over, diag)
    d = ctx.derivatives(y_vec, t, qdot_dep)
    n = len(config.mech.species)
    return {"dm_dt": d[0], "dY_dt": tuple(d[1:1 + n]), "dT_dt": d[1 + n]}


class _RhsContext:
    """Precomputed constants + the derivative evaluation for one simulation."""

    __slots__ = ("config", "mech", "n", "heat_fn", "A_over", "E_over", "diag",
                 "inv_W", "h_in", "inlet_terms", "spd", "track_flows")

    def __init__(self, config, heat_fn, A_over, E_over, diag, track_flows=False):
        self.config = config
        self.mech = config.mech
        self.n = len(config.mech.species)
        self.heat_fn = heat_fn
        self.A_over = A_over
        self.E_over = E_over
        self.diag = diag
        self.track_flows = track_flows
        self.inv_W = tuple(1.0 / sp.W for sp in self.mech.species)
        self.h_in = tuple(_inlet_enthalpy(config, inlet) for inlet in config.inlets)
        self.inlet_terms = config._inlet_terms
        # per species: (T_mid, cp coeffs lo/hi, h coeffs lo/hi, W, T_min, T_max, name)
        self.spd = tuple(
            (sp.T_mid, sp._cp_lo, sp._cp_hi, sp._h_lo, sp._h_hi, sp.W,
             sp.T_min, sp.T_max, sp.name)
            for sp in self.mech.species)

    def derivatives(self, y_vec, t, qdot):
        config = self.config
        n = self.n
        m = y_vec[0]
        Y = y_vec[1:1 + n]
        T = y_vec[1 + n]
        t_val = val(T)
        V = config.V

        # per-species thermo at the reactor temperature
        u_mole = [None] * n
        cv_mass = 0.0
        inv_W_mix = 0.0
        RT = R_UNIVERSAL * T
        for k in range(n):
            T_mid, cp_lo, cp_hi, h_lo, h_hi, W, T_min, T_max, name = self.spd[k]
            if not (T_min <= t_val <= T_max):
                raise ThermoRangeError(
                    f"T = {t_val!r} K outside [{T_min}, {T_max}] K for species '{name}'")
            lo = t_val <= T_mid
            cp = _cp_from(cp_lo if lo else cp_hi, T)
            u_mole[k] = _h_from(h_lo if lo else h_hi, T) - RT
            yk = Y[k]
            cv_mass = cv_mass + yk * ((cp - R_UNIVERSAL) * (1.0 / W))
            inv_W_mix = inv_W_mix + yk * (1.0 / W)

        p = m * (R_UNIVERSAL / V) * T * inv_W_mix
        mdot_out = config.outlet.K_v * relu(p - config.outlet.p_ambient) \
            if config.outlet.K_v > 0.0 else 0.0

        # chemistry
        m_over_V = m * (1.0 / V)
        X = [m_over_V * Y[k] * self.inv_W[k] for k in range(n)]
        omega = net_production_rates(self.mech, X, T, self.A_over, self.E_over,
                                     self.diag)

        inv_m = 1.0 / m
        mdot_in_total = 0.0
        dY = [0.0] * n
        q_flow = 0.0
        for i, inlet in enumerate(config.inlets):
            mdot = inlet.rate(t)
            if mdot == 0.0:
                continue
            mdot_in_total += mdot
            u_in = 0.0
            for k, y_in in self.inlet_terms[i]:
                dY[k] = dY[k] + mdot * y_in
                u_in = u_in + y_in * (u_mole[k] * self.inv_W[k])
            q_flow = q_flow + mdot * (self.h_in[i] - u_in)

        q_chem = 0.0
        for k in range(n):
            w = omega[k]
            flow_k = dY[k]
            if mdot_in_total != 0.0:
                flow_k = flow_k - mdot_in_total * Y[k]
            if type(w) is float and w == 0.0:
                if type(flow_k) is float and flow_k == 0.0:
                    dY[k] = 0.0
                else:
                    dY[k] = flow_k * inv_m
            else:
                chem = (V * self.spd[k][5]) * w
                dY[k] = (flow_k + chem) * inv_m
                q_chem = q_chem + chem * (u_mole[k] * self.inv_W[k])

        dm = mdot_in_total - mdot_out

        dT_num = q_flow - q_chem
        if not (type(qdot) is float and qdot == 0.0):
            if val(qdot) < 0.0:
                raise ContractError("heat deposition rate must be >= 0")
            dT_num = dT_num + qdot
        if not (type(mdot_out) is float and mdot_out == 0.0):
            dT_num = dT_num - mdot_out * (p * V * inv_m)
        dT = dT_num / (m * cv_mass)

        if self.track_flows:
            # cumulative flow integrals ride along in the state vector, so
            # the mass audit closes to roundoff by construction of RK4
            return [dm, *dY, dT, mdot_in_total, mdot_out]
        return [dm, *dY, dT]

    def f(self, y_vec, t):
        qdot = self.heat_fn(t) if self.heat_fn is not None else 0.0
        return self.derivatives(y_vec, t, qdot)


@dataclass
class Trajectory:
    """Grid-point record of a simulation: t, m, T, p, Y plus flow totals."""

    times: np.ndarray
    m: np.ndarray
    T: np.ndarray
    p: np.ndarray
    Y: np.ndarray          # (n_times, n_species)
    species: tuple
    mdot_in: np.ndarray
    mdot_out: np.ndarray
    cum_inflow: np.ndarray     # integral of total inflow, stage-consistent
    cum_outflow: np.ndarray
    diagnostics: Diagnostics = None

    @property
    def final_T(self) -> float:
        return float(self.T[-1])

    def mass_audit(self) -> float:
        """|m(t) - m(0) - (inflow - outflow)| worst case over the grid."""
        defect = self.m - self.m[0] - (self.cum_inflow - self.cum_outflow)
        return float(np.max(np.abs(defect)))

    def species_column(self, name: str) -> np.ndarray:
        return self.Y[:, self.species.index(name)]

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,m,T,p," + ",".join(f"Y_{s}" for s in self.species) + "\n")
            for i in range(len(self.times)):
                row = [self.times[i], self.m[i], self.T[i], self.p[i],
                       *self.Y[i]]
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _grid_times(t_grid):
    if isinstance(t_grid, TimeGrid):
        return t_grid.times()
    times = [float(t) for t in t_grid]
    if len(times) < 2 or any(b <= a for a, b in zip(times, times[1:])):
        raise ContractError("t_grid must be strictly increasing with >= 2 points")
    return times


def integrate_states(config: ReactorConfig, y0_vec, t_grid, heat_fn=None,
                     A_over=None, E_over=None, diag: Diagnostics = None):
    """RK4 over t_grid on raw state vectors [m, Y.., T]; float or Var scalars."""
    ctx = _RhsContext(config, heat_fn, A_over, E_over, diag)
    times = _grid_times(t_grid)
    states = [list(y0_vec)]
    y = states[0]
    for i in range(len(times) - 1):
        y = rk4_step(ctx.f, y, times[i], times[i + 1] - times[i])
        states.append(y)
    return times, states


def simulate(config: ReactorConfig, state0: ReactorState, t_grid,
             heat_fn=None, A_over=None, E_over=None) -> Trajectory:
    """Fixed-step RK4 simulation recording (t, m, T, Y, p) at every grid point."""
    diag = Diagnostics()
    ctx = _RhsContext(config, heat_fn, A_over, E_over, diag, track_flows=True)
    times = _grid_times(t_grid)
    y = [state0.m, *state0.Y, state0.T, 0.0, 0.0]
    states = [y]
    for i in range(len(times) - 1):
        y = rk4_step(ctx.f, y, times[i], times[i + 1] - times[i])
        states.append(y)
    n = len(config.mech.species)
    nt = len(times)
    m = np.empty(nt)
    T = np.empty(nt)
    p = np.empty(nt)
    Y = np.empty((nt, n))
    mdot_in = np.empty(nt)
    mdot_out = np.empty(nt)
    cum_in = np.empty(nt)
    cum_out = np.empty(nt)
    for i, y in enumerate(states):
        m[i] = y[0]
        Y[i] = y[1:1 + n]
        T[i] = y[1 + n]
        cum_in[i] = y[2 + n]
        cum_out[i] = y[3 + n]
        p[i] = pressure_of(config, m[i], T[i], Y[i])
        mdot_in[i] = sum(inlet.rate(times[i]) for inlet in config.inlets)
        mdot_out[i] = config.outlet.K_v * max(0.0, p[i] - config.outlet.p_ambient)
    return Trajectory(times=np.asarray(times), m=m, T=T, p=p, Y=Y,
                      species=config.mech.species_names,
                      mdot_in=mdot_in, mdot_out=mdot_out,
                      cum_inflow=cum_in, cum_outflow=cum_out, diagnostics=diag)
