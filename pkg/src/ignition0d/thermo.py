"""Species and mixture thermodynamics for an ideal gas, NASA-7 polynomials.

Two-range NASA-7 form (kmol basis, R = 8314.46... J/(kmol*K)):

    cp/R  = a1 + a2 T + a3 T^2 + a4 T^3 + a5 T^4
    h/RT  = a1 + a2 T/2 + a3 T^2/3 + a4 T^3/4 + a5 T^4/5 + a6/T
    s/R   = a1 ln T + a2 T + a3 T^2/2 + a4 T^3/3 + a5 T^4/4 + a7

Internal energy u = h - R T; entropy gets the ideal-gas pressure correction
-R ln(p/p_ref). All evaluators accept a plain float temperature or an
autodiff ``Var`` and are pure functions of immutable inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .autodiff import log, val
from .constants import P_REF, R_UNIVERSAL
from .errors import DegenerateMixtureError, MechanismError, ThermoRangeError


@dataclass(frozen=True)
class SpeciesThermo:
    """One species: molecular weight plus NASA-7 coefficient sets."""

    name: str
    W: float                 # kg/kmol
    nasa_low: tuple          # a1..a7 for [T_min, T_mid]
    nasa_high: tuple         # a1..a7 for [T_mid, T_max]
    T_min: float
    T_mid: float
    T_max: float
    # Horner-ready coefficient tuples, derived in __post_init__.
    _cp_lo: tuple = field(default=(), repr=False, compare=False)
    _cp_hi: tuple = field(default=(), repr=False, compare=False)
    _h_lo: tuple = field(default=(), repr=False, compare=False)
    _h_hi: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.W > 0.0:
            raise MechanismError(f"species '{self.name}': W must be > 0")
        if not (self.T_min < self.T_mid < self.T_max):
            raise MechanismError(
                f"species '{self.name}': need T_min < T_mid < T_max")
        if len(self.nasa_low) != 7 or len(self.nasa_high) != 7:
            raise MechanismError(
                f"species '{self.name}': NASA-7 sets need 7 coefficients")
        for attr, coeffs in (("_cp_lo", self.nasa_low), ("_cp_hi", self.nasa_high)):
            a = coeffs
            object.__setattr__(self, attr, (a[0], a[1], a[2], a[3], a[4]))
        for attr, coeffs in (("_h_lo", self.nasa_low), ("_h_hi", self.nasa_high)):
            a = coeffs
            object.__setattr__(
                self, attr,
                (a[5], a[0], a[1] / 2.0, a[2] / 3.0, a[3] / 4.0, a[4] / 5.0))
        lo = _cp_from(self._cp_lo, self.T_mid)
        hi = _cp_from(self._cp_hi, self.T_mid)
        if abs(lo - hi) > 1e-3 * abs(hi):
            raise MechanismError(
                f"species '{self.name}': cp jump at T_mid exceeds 1e-3 relative "
                f"({lo:.6g} vs {hi:.6g} J/(kmol*K))")

    @property
    def T_range(self):
        return (self.T_min, self.T_max)


@dataclass(frozen=True)
class MixtureState:
    """Temperature plus mass fractions, validated at construction."""

    T: float
    Y: tuple

    def __post_init__(self):
        object.__setattr__(self, "Y", tuple(float(y) for y in self.Y))
        if any(y < 0.0 for y in self.Y):
            raise DegenerateMixtureError("mass fractions must be non-negative")
        if abs(sum(self.Y) - 1.0) >= 1e-9:
            raise DegenerateMixtureError(
                f"mass fractions must sum to 1 (got {sum(self.Y)!r})")


def _check_range(sp: SpeciesThermo, T) -> float:
    t = val(T)
    if not (sp.T_min <= t <= sp.T_max):
        raise ThermoRangeError(
            f"T = {t!r} K outside [{sp.T_min}, {sp.T_max}] K for species '{sp.name}'")
    return t


def _cp_from(c, T):
    # R * (a1 + T(a2 + T(a3 + T(a4 + T a5))))
    return R_UNIVERSAL * (c[0] + T * (c[1] + T * (c[2] + T * (c[3] + T * c[4]))))


def _h_from(c, T):
    # R * (a6 + T(a1 + T(a2/2 + T(a3/3 + T(a4/4 + T a5/5)))))
    return R_UNIVERSAL * (
        c[0] + T * (c[1] + T * (c[2] + T * (c[3] + T * (c[4] + T * c[5])))))


def cp_mole(sp: SpeciesThermo, T):
    """Molar heat capacity at constant pressure, J/(kmol*K)."""
    t = _check_range(sp, T)
    return _cp_from(sp._cp_lo if t <= sp.T_mid else sp._cp_hi, T)


def h_mole(sp: SpeciesThermo, T):
    """Molar enthalpy, J/kmol."""
    t = _check_range(sp, T)
    return _h_from(sp._h_lo if t <= sp.T_mid else sp._h_hi, T)


def u_mole(sp: SpeciesThermo, T):
    """Molar internal energy u = h - R T, J/kmol."""
    return h_mole(sp, T) - R_UNIVERSAL * T


def s_mole(sp: SpeciesThermo, T, p=P_REF):
    """Molar entropy at pressure p, J/(kmol*K)."""
    t = _check_range(sp, T)
    a = sp.nasa_low if t <= sp.T_mid else sp.nasa_high
    s0 = R_UNIVERSAL * (
        a[0] * log(T)
        + T * (a[1] + T * (a[2] / 2.0 + T * (a[3] / 3.0 + T * (a[4] / 4.0))))
        + a[6])
    if p == P_REF:
        return s0
    return s0 - R_UNIVERSAL * log(p / P_REF)


def mixture_molecular_weight(species, Y):
    """W_mix = 1 / sum(Y_k / W_k), kg/kmol."""
    inv = 0.0
    for sp, y in zip(species, Y):
        inv = inv + y / sp.W
    if val(inv) <= 0.0:
        raise DegenerateMixtureError("all-zero mass fractions")
    return 1.0 / inv


def mixture_props(species, state: MixtureState):
    """Mixture W, cv, h, u (mass basis) for a validated state.

    Returns a dict with keys W_mix [kg/kmol], cv_mass [J/(kg*K)],
    h_mass [J/kg], u_mass [J/kg].
    """
    if len(species) != len(state.Y):
        raise ValueError("species list and Y length mismatch")
    W_mix = mixture_molecular_weight(species, state.Y)
    cv = h = u = 0.0
    for sp, y in zip(species, state.Y):
        if y == 0.0:
            continue
        hk = h_mole(sp, state.T)
        cv += y * (cp_mole(sp, state.T) - R_UNIVERSAL) / sp.W
        h += y * hk / sp.W
        u += y * (hk - R_UNIVERSAL * state.T) / sp.W
    return {"W_mix": W_mix, "cv_mass": cv, "h_mass": h, "u_mass": u}


def pressure(species, m, V, state: MixtureState):
    """Ideal-gas pressure p = m R T / (W_mix V), Pa."""
    if not (val(m) > 0.0 and V > 0.0):
        raise ValueError("pressure requires m > 0 and V > 0")
    W_mix = mixture_molecular_weight(species, state.Y)
    return m * R_UNIVERSAL * state.T / (W_mix * V)


# -- data file loading -------------------------------------------------

_REQUIRED_KEYS = ("name", "W", "T_min", "T_mid", "T_max", "nasa_low", "nasa_high")


def _line_of(text: str, needle: str) -> int:
    pos = text.find(needle)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else 0


def load_species(path) -> dict:
    """Load a thermo JSON file into an ordered {name: SpeciesThermo} dict.

    Malformed files are rejected with an error anchored to the offending
    line of the file.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    data = json.loads(text)  # JSONDecodeError already carries line/column
    records = data["species"] if isinstance(data, dict) else data
    out: dict[str, SpeciesThermo] = {}
    for idx, rec in enumerate(records):
        name = rec.get("name", f"<record {idx}>")
        missing = [k for k in _REQUIRED_KEYS if k not in rec]
        if missing:
            raise MechanismError(
                f"{path}:{_line_of(text, name)}: species '{name}' missing {missing}")
        if name in out:
            raise MechanismError(
                f"{path}:{_line_of(text, name)}: duplicate species '{name}'")
        try:
            out[name] = SpeciesThermo(
                name=name, W=float(rec["W"]),
                nasa_low=tuple(float(c) for c in rec["nasa_low"]),
                nasa_high=tuple(float(c) for c in rec["nasa_high"]),
                T_min=float(rec["T_min"]), T_mid=float(rec["T_mid"]),
                T_max=float(rec["T_max"]))
        except MechanismError as exc:
            raise MechanismError(
                f"{path}:{_line_of(text, name)}: {exc}") from None
    return out


def default_thermo_path():
    return resources.files("ignition0d").joinpath("data/thermo.json")


def load_default_species() -> dict:
    with resources.as_file(default_thermo_path()) as p:
        return load_species(p)
