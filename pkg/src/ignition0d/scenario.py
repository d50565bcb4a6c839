"""Operating scenario: reactor geometry, feeds, grid, and rate calibration.

Everything an experiment needs to rebuild its reactor lives in one versioned
JSON file so runs are reproducible byte-for-byte. The packaged default is a
normalized 1 m^3 chamber initially holding pure methane at 350 K and
50662.5 Pa, with a constant oxygen jet, a methane coflow whose rate is
proportional to the MaF parameter, and a linear outlet valve.

``rate_scale`` and ``e_scale`` multiply the mechanism's pre-exponential
factors and activation energies for this operating envelope. They are
declared calibration constants of the synthetic scenario (see README):
without them the shipped rate constants give essentially inert chemistry on
the microsecond window, and no ignition threshold exists to study.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .constants import R_UNIVERSAL
from .errors import MechanismError
from .kinetics import Mechanism, load_default_mechanism
from .odeint import TimeGrid
from .reactor import Inlet, Outlet, ReactorConfig, ReactorState


def _composition_vector(mech: Mechanism, mapping: dict) -> tuple:
    vec = [0.0] * len(mech.species)
    for name, y in mapping.items():
        vec[mech.index(name)] = float(y)
    return tuple(vec)


@dataclass(frozen=True)
class Scenario:
    name: str
    V: float
    T0: float
    p0: float
    Y0: tuple
    oxidizer: Inlet
    coflow_mdot_max: float      # coflow rate at MaF = 0.02, kg/s
    coflow_Y: tuple
    coflow_T: float
    outlet: Outlet
    grid: TimeGrid
    n_observations: int
    rate_scale: float
    e_scale: float
    alpha_loss: float
    heat_scale: float
    mech: Mechanism

    def initial_state(self) -> ReactorState:
        inv_W = sum(y / sp.W for sp, y in zip(self.mech.species, self.Y0))
        m0 = self.p0 * self.V * inv_W ** -1 / (R_UNIVERSAL * self.T0)
        return ReactorState(m=m0, T=self.T0, Y=self.Y0)

    def config_for(self, maf: float = 0.0) -> ReactorConfig:
        inlets = [self.oxidizer]
        if maf > 0.0:
            inlets.append(Inlet(mdot=self.coflow_mdot_max * (maf / 0.02),
                                Y_in=self.coflow_Y, T_in=self.coflow_T))
        return ReactorConfig(V=self.V, inlets=tuple(inlets),
                             outlet=self.outlet, mech=self.mech)

    def arrhenius_base(self):
        """Effective per-reaction (A, E) after scenario calibration scaling."""
        A = tuple(r.A * self.rate_scale for r in self.mech.reactions)
        E = tuple(r.E * self.e_scale for r in self.mech.reactions)
        return A, E

    def observation_grid(self) -> TimeGrid:
        """The last n_observations points of the simulation grid."""
        n_obs = self.n_observations
        if n_obs > self.grid.n_steps:
            raise MechanismError("more observations than integration steps")
        start = self.grid.n_steps - n_obs + 1
        return TimeGrid(t0=self.grid.t0 + start * self.grid.dt,
                        dt=self.grid.dt, n_steps=n_obs - 1)


def load_scenario(path=None, mech: Mechanism = None) -> Scenario:
    if path is None:
        with resources.as_file(default_scenario_path()) as p:
            return load_scenario(p, mech)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    mech = mech if mech is not None else load_default_mechanism()
    try:
        grid = TimeGrid(t0=float(data["grid"]["t0"]), dt=float(data["grid"]["dt"]),
                        n_steps=int(data["grid"]["n_steps"]))
        ox = data["oxidizer_inlet"]
        mdot = ox["mdot"]
        if isinstance(mdot, list):
            mdot = (tuple(mdot[0]), tuple(mdot[1]))
        oxidizer = Inlet(mdot=mdot, Y_in=_composition_vector(mech, ox["Y_in"]),
                         T_in=float(ox["T_in"]))
        co = data["fuel_coflow"]
        return Scenario(
            name=str(data["scenario_version"]),
            V=float(data["V"]),
            T0=float(data["initial"]["T"]),
            p0=float(data["initial"]["p"]),
            Y0=_composition_vector(mech, data["initial"]["Y"]),
            oxidizer=oxidizer,
            coflow_mdot_max=float(co["mdot_at_max_MaF"]),
            coflow_Y=_composition_vector(mech, co["Y_in"]),
            coflow_T=float(co["T_in"]),
            outlet=Outlet(K_v=float(data["outlet"]["K_v"]),
                          p_ambient=float(data["outlet"]["p_ambient"])),
            grid=grid,
            n_observations=int(data.get("n_observations", 20)),
            rate_scale=float(data.get("rate_scale", 1.0)),
            e_scale=float(data.get("e_scale", 1.0)),
            alpha_loss=float(data.get("alpha_loss", 1e7)),
            heat_scale=float(data.get("heat_scale", 1.0)),
            mech=mech)
    except KeyError as exc:
        raise MechanismError(f"{path}: missing scenario key {exc}") from None


def default_scenario_path():
    return resources.files("ignition0d").joinpath("data/scenario.json")
