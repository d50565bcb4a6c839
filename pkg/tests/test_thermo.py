import json
import math

import pytest

from ignition0d import thermo
from ignition0d.constants import R_UNIVERSAL
from ignition0d.errors import DegenerateMixtureError, MechanismError, ThermoRangeError
from ignition0d.rng import SplitMix64
from ignition0d.thermo import (MixtureState, SpeciesThermo, cp_mole, h_mole,
                               mixture_props, pressure, s_mole, u_mole)


def make_const_cp(a1=3.5, a6=0.0, name="X2"):
    coeffs = (a1, 0.0, 0.0, 0.0, 0.0, a6, 0.0)
    return SpeciesThermo(name=name, W=2.0, nasa_low=coeffs, nasa_high=coeffs,
                         T_min=200.0, T_mid=1000.0, T_max=3500.0)


def test_constant_cp_species():
    sp = make_const_cp()
    assert cp_mole(sp, 400.0) == pytest.approx(3.5 * R_UNIVERSAL)
    assert cp_mole(sp, 400.0) == pytest.approx(29100.61916353634)


def test_constant_cp_internal_energy_closed_form():
    # u = 3.5 R T - R T = 2.5 R T for the a6 = 0 constant-cp species
    sp = make_const_cp()
    for T in (300.0, 750.0, 2000.0):
        assert u_mole(sp, T) == pytest.approx(2.5 * R_UNIVERSAL * T, rel=1e-13)


def test_o2_values_against_direct_polynomial_oracle(species_table):
    # Frozen from an independent high-precision direct evaluation of the
    # NASA-7 sums (not the Horner forms used by the library).
    o2 = species_table["O2"]
    assert cp_mole(o2, 350.0) == pytest.approx(29711.60389121925, rel=1e-12)
    assert u_mole(o2, 350.0) == pytest.approx(-1378638.4497052196, rel=1e-12)
    assert s_mole(o2, 350.0) == pytest.approx(209883.2249286297, rel=1e-12)


def test_cp_continuity_at_switch_for_all_shipped_species(species_table):
    for sp in species_table.values():
        lo = R_UNIVERSAL * sum(c * sp.T_mid ** i for i, c in enumerate(sp.nasa_low[:5]))
        hi = R_UNIVERSAL * sum(c * sp.T_mid ** i for i, c in enumerate(sp.nasa_high[:5]))
        assert abs(lo - hi) <= 1e-3 * abs(hi)


def test_h_minus_u_is_RT(species_table):
    stream = SplitMix64(2024)
    for sp in species_table.values():
        for _ in range(100):
            T = stream.uniform_in(sp.T_min, sp.T_max)
            assert h_mole(sp, T) - u_mole(sp, T) == pytest.approx(
                R_UNIVERSAL * T, rel=1e-12)


def test_out_of_range_error_names_species(species_table):
    with pytest.raises(ThermoRangeError, match="CH4"):
        cp_mole(species_table["CH4"], 5000.0)
    with pytest.raises(ThermoRangeError, match="O2"):
        h_mole(species_table["O2"], 100.0)


def test_mixture_single_species(species_table):
    species = list(species_table.values())
    st = MixtureState(T=350.0, Y=(1.0, 0.0, 0.0, 0.0, 0.0))
    props = mixture_props(species, st)
    assert props["W_mix"] == pytest.approx(16.043)
    assert props["cv_mass"] == pytest.approx(1845.735181000523, rel=1e-12)


def test_mixture_harmonic_mean(species_table):
    species = list(species_table.values())
    st = MixtureState(T=350.0, Y=(0.5, 0.5, 0.0, 0.0, 0.0))
    props = mixture_props(species, st)
    assert props["W_mix"] == pytest.approx(1.0 / (0.5 / 16.043 + 0.5 / 31.998))
    assert props["W_mix"] == pytest.approx(21.37107528985658, rel=1e-12)


def test_mixture_permutation_invariance(species_table):
    species = list(species_table.values())
    Y = (0.2, 0.3, 0.1, 0.15, 0.25)
    ref = mixture_props(species, MixtureState(T=800.0, Y=Y))
    perm = [3, 0, 4, 1, 2]
    props = mixture_props([species[i] for i in perm],
                          MixtureState(T=800.0, Y=tuple(Y[i] for i in perm)))
    for key in ref:
        assert props[key] == pytest.approx(ref[key], rel=1e-12)


def test_degenerate_mixture_rejected():
    with pytest.raises(DegenerateMixtureError):
        MixtureState(T=300.0, Y=(0.0, 0.0))
    with pytest.raises(DegenerateMixtureError):
        thermo.mixture_molecular_weight([make_const_cp()], [0.0])


def test_pressure_round_trip(species_table):
    # pure CH4 at 350 K and 50662.5 Pa has density 0.2792993794848282 kg/m^3
    species = list(species_table.values())
    st = MixtureState(T=350.0, Y=(1.0, 0.0, 0.0, 0.0, 0.0))
    rho = 0.2792993794848282
    assert pressure(species, rho * 1.0, 1.0, st) == pytest.approx(50662.5, rel=1e-12)


def test_pressure_linearity_and_intensivity(species_table):
    species = list(species_table.values())
    st = MixtureState(T=350.0, Y=(1.0, 0.0, 0.0, 0.0, 0.0))
    p1 = pressure(species, 0.3, 1.0, st)
    assert pressure(species, 0.6, 1.0, st) == pytest.approx(2.0 * p1, rel=1e-14)
    assert pressure(species, 0.6, 2.0, st) == pytest.approx(p1, rel=1e-14)


def test_state_invariants():
    with pytest.raises(DegenerateMixtureError):
        MixtureState(T=300.0, Y=(-0.1, 1.1))
    with pytest.raises(DegenerateMixtureError):
        MixtureState(T=300.0, Y=(0.5, 0.6))


def test_loader_rejects_bad_files(tmp_path, species_table):
    good = {s.name: s for s in species_table.values()}
    rec = {
        "name": "O2", "W": 31.998, "T_min": 1000.0, "T_mid": 500.0,
        "T_max": 3500.0, "nasa_low": list(good["O2"].nasa_low),
        "nasa_high": list(good["O2"].nasa_high),
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"species": [rec]}, indent=1))
    with pytest.raises(MechanismError) as err:
        thermo.load_species(path)
    message = str(err.value)
    assert "O2" in message and str(path) in message
    # anchored to a real line of the file
    line_no = int(message.split(str(path) + ":", 1)[1].split(":", 1)[0])
    assert 1 <= line_no <= len(path.read_text().splitlines())


def test_loader_rejects_missing_keys(tmp_path):
    path = tmp_path / "missing.json"
    path.write_text(json.dumps({"species": [{"name": "O2", "W": 31.998}]}))
    with pytest.raises(MechanismError, match="missing"):
        thermo.load_species(path)


def test_loader_rejects_cp_jump(tmp_path, species_table):
    o2 = species_table["O2"]
    low = list(o2.nasa_low)
    low[0] += 0.5   # break continuity at T_mid
    rec = {"name": "O2", "W": 31.998, "T_min": 200.0, "T_mid": 1000.0,
           "T_max": 3500.0, "nasa_low": low, "nasa_high": list(o2.nasa_high)}
    path = tmp_path / "jump.json"
    path.write_text(json.dumps({"species": [rec]}))
    with pytest.raises(MechanismError, match="cp jump"):
        thermo.load_species(path)


def test_default_table_contents(species_table):
    assert list(species_table) == ["CH4", "O2", "H2O", "CO2", "N2"]
    assert species_table["N2"].W == pytest.approx(28.014)
