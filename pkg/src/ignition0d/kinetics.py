"""Reaction mechanism representation and Arrhenius production rates.

Rates are molar: the rate of progress Q_j and the net production rates
omega_k are in kmol/(m^3*s); the mass generation rate of species k in a
volume V is V * omega_k * W_k (kg/s). Writing omega_k molar this way keeps
the species and energy balances dimensionally consistent (see README, unit
conventions).

Negative concentrations handed in by an integrator overshoot are clamped to
zero inside the rate evaluation only; a diagnostics counter records how
often that happened. All functions accept floats or autodiff ``Var``s.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .autodiff import exp, relu, val
from .constants import P_REF, R_UNIVERSAL
from .errors import ContractError, MechanismError
from .thermo import SpeciesThermo, h_mole, s_mole

ATOMIC_WEIGHTS = {"H": 1.008, "C": 12.011, "N": 14.007, "O": 15.999, "Ar": 39.95}

_FORMULA_RE = re.compile(r"([A-Z][a-z]?)(\d*)")


def parse_formula(name: str) -> dict:
    """Element counts from a species name like 'CH4' or 'H2O'."""
    counts: dict[str, float] = {}
    pos = 0
    for m in _FORMULA_RE.finditer(name):
        if m.start() != pos:
            raise MechanismError(f"cannot parse species formula '{name}'")
        pos = m.end()
        element = m.group(1)
        if element not in ATOMIC_WEIGHTS:
            raise MechanismError(f"unknown element '{element}' in '{name}'")
        counts[element] = counts.get(element, 0.0) + float(m.group(2) or 1)
    if pos != len(name) or not counts:
        raise MechanismError(f"cannot parse species formula '{name}'")
    return counts


class Diagnostics:
    """Mutable counters surfaced to callers that want them."""

    __slots__ = ("negative_concentration_clamps",)

    def __init__(self):
        self.negative_concentration_clamps = 0


@dataclass(frozen=True)
class Reaction:
    """Stoichiometry plus Arrhenius triple for one (possibly reversible) reaction.

    Coefficient tuples are aligned with the owning Mechanism's species order.
    ``orders`` are the forward reaction orders and default to nu_fwd.
    """

    nu_fwd: tuple
    nu_rev: tuple
    A: float
    beta: float
    E: float
    reversible: bool = False
    orders: tuple = None
    # (index, order) pairs and net coefficients, precomputed for rate loops
    _fwd_terms: tuple = field(default=(), repr=False, compare=False)
    _rev_terms: tuple = field(default=(), repr=False, compare=False)
    _net: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        nf = tuple(float(v) for v in self.nu_fwd)
        nr = tuple(float(v) for v in self.nu_rev)
        if len(nf) != len(nr):
            raise MechanismError("nu_fwd and nu_rev length mismatch")
        if any(v < 0.0 for v in nf + nr):
            raise MechanismError("stoichiometric coefficients must be >= 0")
        if not any(nf):
            raise MechanismError("a reaction needs at least one reactant")
        orders = self.orders
        orders = nf if orders is None else tuple(float(v) for v in orders)
        if len(orders) != len(nf):
            raise MechanismError("orders length mismatch")
        object.__setattr__(self, "nu_fwd", nf)
        object.__setattr__(self, "nu_rev", nr)
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "_fwd_terms",
                           tuple((k, o) for k, o in enumerate(orders) if o != 0.0))
        object.__setattr__(self, "_rev_terms",
                           tuple((k, o) for k, o in enumerate(nr) if o != 0.0))
        object.__setattr__(self, "_net",
                           tuple(nr[k] - nf[k] for k in range(len(nf))))

    @property
    def delta_nu(self) -> float:
        """Net change in moles, sum_k (nu''_k - nu'_k)."""
        return sum(self._net)


@dataclass(frozen=True)
class Mechanism:
    """Ordered species, reactions, and the element bookkeeping tying them together."""

    species: tuple
    reactions: tuple
    elements: tuple = ()
    element_matrix: tuple = ()

    def __post_init__(self):
        names = [sp.name for sp in self.species]
        if len(set(names)) != len(names):
            raise MechanismError("duplicate species names in mechanism")
        if not self.elements:
            counts = [parse_formula(n) for n in names]
            elements = tuple(sorted({e for c in counts for e in c}))
            matrix = tuple(tuple(c.get(e, 0.0) for e in elements) for c in counts)
            object.__setattr__(self, "elements", elements)
            object.__setattr__(self, "element_matrix", matrix)
        for sp, row in zip(self.species, self.element_matrix):
            W_formula = sum(n * ATOMIC_WEIGHTS[e] for e, n in zip(self.elements, row))
            if abs(W_formula - sp.W) > 0.01:
                raise MechanismError(
                    f"species '{sp.name}': W {sp.W} inconsistent with formula "
                    f"weight {W_formula:.4f} (tolerance 0.01 kg/kmol)")
        for j, rxn in enumerate(self.reactions):
            if len(rxn.nu_fwd) != len(self.species):
                raise MechanismError(f"reaction {j}: coefficient length mismatch")
            for e_idx, element in enumerate(self.elements):
                bal = sum(rxn._net[k] * self.element_matrix[k][e_idx]
                          for k in range(len(self.species)))
                if abs(bal) > 1e-9:
                    raise MechanismError(
                        f"reaction {j} does not balance element '{element}' "
                        f"(residual {bal:g})")

    @property
    def species_names(self):
        return tuple(sp.name for sp in self.species)

    def index(self, name: str) -> int:
        return self.species_names.index(name)

    @property
    def weights(self):
        return tuple(sp.W for sp in self.species)


def forward_rate_constant(A, beta, E, T):
    """K_f = A T^beta exp(-E / (R T)); units follow A."""
    if val(T) <= 0.0:
        raise ContractError("forward_rate_constant requires T > 0")
    k = exp((-E / R_UNIVERSAL) / T)
    if beta != 0.0:
        k = k * T ** beta
    return A * k


def delta_entropy_enthalpy(mech: Mechanism, rxn: Reaction, T):
    """Standard-state (Delta S0, Delta H0) of the reaction at temperature T."""
    dS = 0.0
    dH = 0.0
    for k, nu in enumerate(rxn._net):
        if nu != 0.0:
            sp = mech.species[k]
            dS = dS + nu * s_mole(sp, T)
            dH = dH + nu * h_mole(sp, T)
    return dS, dH


def reverse_rate_constant(rxn: Reaction, T, dS0, dH0):
    """K_r from K_f and the equilibrium expression.

    K_r = K_f / [ (p_ref/(R T))^sum(nu) * exp(dS0/R - dH0/(R T)) ]
    """
    if not rxn.reversible:
        raise ContractError("reverse_rate_constant called on irreversible reaction")
    kf = forward_rate_constant(rxn.A, rxn.beta, rxn.E, T)
    keq = exp(dS0 / R_UNIVERSAL - (dH0 / R_UNIVERSAL) / T)
    dnu = rxn.delta_nu
    if dnu != 0.0:
        keq = keq * (P_REF / (R_UNIVERSAL * T)) ** dnu
    return kf / keq


def _conc_product(terms, X, diag):
    prod = 1.0
    for k, order in terms:
        x = X[k]
        if val(x) < 0.0:
            if diag is not None:
                diag.negative_concentration_clamps += 1
            x = relu(x)
        if order == 1.0:
            prod = prod * x
        elif order == 2.0:
            prod = prod * (x * x)
        else:
            prod = prod * x ** order  # 0^0 == 1 by float semantics
    return prod


def rate_of_progress(rxn: Reaction, X, T, mech: Mechanism = None,
                     A=None, E=None, diag: Diagnostics = None):
    """Net rate of progress Q = K_f prod X^order - K_r prod X^nu'', kmol/(m^3 s).

    ``A`` and ``E`` override the reaction's Arrhenius constants for this
    evaluation. A reversible reaction needs ``mech`` for its thermodynamics.
    """
    kf = forward_rate_constant(rxn.A if A is None else A, rxn.beta,
                               rxn.E if E is None else E, T)
    q = kf * _conc_product(rxn._fwd_terms, X, diag)
    if rxn.reversible:
        if mech is None:
            raise ContractError("reversible reaction needs the mechanism thermo")
        dS0, dH0 = delta_entropy_enthalpy(mech, rxn, T)
        kr = reverse_rate_constant(rxn, T, dS0, dH0)
        q = q - kr * _conc_product(rxn._rev_terms, X, diag)
    return q


def net_production_rates(mech: Mechanism, X, T, A_override=None,
                         E_override=None, diag: Diagnostics = None):
    """omega_k = sum_j nu_kj Q_j per species, kmol/(m^3 s)."""
    n = len(mech.species)
    if len(X) != n:
        raise ContractError("concentration vector length mismatch")
    for name, over in (("A_override", A_override), ("E_override", E_override)):
        if over is not None:
            if len(over) != len(mech.reactions):
                raise ContractError(f"{name} length != number of reactions")
            if any(val(v) <= 0.0 for v in over):
                raise ContractError(f"{name} entries must be positive")
    omega = [0.0] * n
    for j, rxn in enumerate(mech.reactions):
        q = rate_of_progress(
            rxn, X, T, mech,
            A=None if A_override is None else A_override[j],
            E=None if E_override is None else E_override[j],
            diag=diag)
        for k, nu in enumerate(rxn._net):
            if nu != 0.0:
                omega[k] = omega[k] + nu * q
    return omega


# -- mechanism file loading --------------------------------------------

def load_mechanism(path, species_table: dict) -> Mechanism:
    """Load a mechanism JSON file, resolving species against a thermo table."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        names = list(data["species"])
        raw_reactions = list(data["reactions"])
    except KeyError as exc:
        raise MechanismError(f"{path}: missing top-level key {exc}") from None
    missing = [n for n in names if n not in species_table]
    if missing:
        raise MechanismError(f"{path}: species {missing} not in thermo data")
    species = tuple(species_table[n] for n in names)
    idx = {n: k for k, n in enumerate(names)}

    def coeff_vector(mapping, where):
        vec = [0.0] * len(names)
        for n, v in dict(mapping).items():
            if n not in idx:
                raise MechanismError(f"{path}: {where} references unknown species '{n}'")
            vec[idx[n]] = float(v)
        return tuple(vec)

    reactions = []
    for j, rec in enumerate(raw_reactions):
        try:
            reactions.append(Reaction(
                nu_fwd=coeff_vector(rec["nu_fwd"], f"reaction {j} nu_fwd"),
                nu_rev=coeff_vector(rec.get("nu_rev", {}), f"reaction {j} nu_rev"),
                orders=(coeff_vector(rec["orders"], f"reaction {j} orders")
                        if "orders" in rec else None),
                A=float(rec["A"]), beta=float(rec.get("beta", 0.0)),
                E=float(rec["E"]), reversible=bool(rec.get("reversible", False))))
        except KeyError as exc:
            raise MechanismError(f"{path}: reaction {j} missing key {exc}") from None
    return Mechanism(species=species, reactions=tuple(reactions))


def default_mechanism_path():
    return resources.files("ignition0d").joinpath("data/mechanism.json")


def load_default_mechanism(species_table: dict = None) -> Mechanism:
    from .thermo import load_default_species
    table = species_table if species_table is not None else load_default_species()
    with resources.as_file(default_mechanism_path()) as p:
        return load_mechanism(p, table)
