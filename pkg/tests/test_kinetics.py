import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ignition0d import kinetics
from ignition0d.constants import P_REF, R_UNIVERSAL
from ignition0d.errors import ContractError, MechanismError
from ignition0d.kinetics import (Diagnostics, Mechanism, Reaction,
                                 forward_rate_constant, net_production_rates,
                                 rate_of_progress, reverse_rate_constant)
from ignition0d.thermo import h_mole, s_mole


def test_forward_rate_constant_paper_constants():
    # frozen from an independent high-precision evaluation
    k = forward_rate_constant(121.75, 0.0, 1.68e7, 350.0)
    assert k == pytest.approx(0.3786650339659249, rel=1e-12)


def test_forward_rate_zero_activation():
    for T in (300.0, 1000.0, 2500.0):
        assert forward_rate_constant(7.5, 0.0, 0.0, T) == 7.5


def test_forward_rate_pure_power_law():
    for T in (10.0, 350.0, 1234.5):
        assert forward_rate_constant(1.0, 1.0, 0.0, T) == pytest.approx(T)


def test_forward_rate_increasing_in_T():
    ks = [forward_rate_constant(5.0, 0.5, 2e7, T)
          for T in (300.0, 600.0, 1200.0, 2400.0)]
    assert all(b > a for a, b in zip(ks, ks[1:]))


def test_reverse_equals_forward_for_symmetric_reaction(mech):
    rxn = Reaction(nu_fwd=(1.0, 0, 0, 0, 0), nu_rev=(1.0, 0, 0, 0, 0),
                   A=42.0, beta=0.0, E=1e7, reversible=True)
    dS, dH = kinetics.delta_entropy_enthalpy(mech, rxn, 900.0)
    assert dS == 0.0 and dH == 0.0
    kf = forward_rate_constant(42.0, 0.0, 1e7, 900.0)
    assert reverse_rate_constant(rxn, 900.0, dS, dH) == pytest.approx(kf)


def test_reverse_on_irreversible_is_contract_violation(mech):
    with pytest.raises(ContractError):
        reverse_rate_constant(mech.reactions[0], 1000.0, 0.0, 0.0)


def test_reverse_rate_matches_equilibrium_expression(mech):
    # toy reversible isomerization CH4 <-> CO2 (stoichiometry only; the
    # element check is bypassed by constructing the Reaction directly)
    rxn = Reaction(nu_fwd=(1.0, 0, 0, 0, 0), nu_rev=(0, 0, 0, 1.0, 0),
                   A=3.0, beta=0.0, E=2e7, reversible=True)
    T = 1000.0
    dS, dH = kinetics.delta_entropy_enthalpy(mech, rxn, T)
    got = reverse_rate_constant(rxn, T, dS, dH)
    # independent assembly of the equilibrium expression
    ch4, co2 = mech.species[0], mech.species[3]
    dS_ref = s_mole(co2, T) - s_mole(ch4, T)
    dH_ref = h_mole(co2, T) - h_mole(ch4, T)
    kf = 3.0 * math.exp(-2e7 / (R_UNIVERSAL * T))
    keq = math.exp(dS_ref / R_UNIVERSAL - dH_ref / (R_UNIVERSAL * T))
    assert got == pytest.approx(kf / keq, rel=1e-12)
    # delta_nu = 0 here, so the pressure factor must not appear; a synthetic
    # 1 -> 2 reaction must include it
    rxn2 = Reaction(nu_fwd=(0, 1.0, 0, 0, 0), nu_rev=(0, 0, 2.0, 0, 0),
                    A=3.0, beta=0.0, E=2e7, reversible=True)
    dS2, dH2 = kinetics.delta_entropy_enthalpy(mech, rxn2, T)
    got2 = reverse_rate_constant(rxn2, T, dS2, dH2)
    keq2 = (P_REF / (R_UNIVERSAL * T)) ** 1.0 * math.exp(
        dS2 / R_UNIVERSAL - dH2 / (R_UNIVERSAL * T))
    kf2 = 3.0 * math.exp(-2e7 / (R_UNIVERSAL * T))
    assert got2 == pytest.approx(kf2 / keq2, rel=1e-12)


def test_rate_of_progress_zero_reactant(mech):
    q = rate_of_progress(mech.reactions[0], [0.4, 0.0, 0.0, 0.0, 0.0], 350.0)
    assert q == 0.0


def test_rate_of_progress_unit_concentrations(mech):
    q = rate_of_progress(mech.reactions[0], [1.0, 1.0, 0.0, 0.0, 0.0], 350.0)
    assert q == pytest.approx(0.3786650339659249, rel=1e-12)


def test_rate_of_progress_order_two_in_oxygen(mech):
    rxn = mech.reactions[0]
    q1 = rate_of_progress(rxn, [0.3, 0.2, 0, 0, 0], 400.0)
    q2 = rate_of_progress(rxn, [0.3, 0.4, 0, 0, 0], 400.0)
    assert q2 == pytest.approx(4.0 * q1, rel=1e-12)


def test_negative_concentration_clamped_with_diagnostics(mech):
    diag = Diagnostics()
    q = rate_of_progress(mech.reactions[0], [0.3, -1e-9, 0, 0, 0], 400.0,
                         diag=diag)
    assert q == 0.0
    assert diag.negative_concentration_clamps == 1


def test_net_production_rates_inert(mech):
    w = net_production_rates(mech, [0.0, 0.0, 0.1, 0.2, 0.7], 1200.0)
    assert w == [0.0] * 5


def test_net_production_rates_stoichiometry(mech):
    X = [0.8, 0.5, 0.0, 0.0, 0.0]
    q = rate_of_progress(mech.reactions[0], X, 500.0)
    w = net_production_rates(mech, X, 500.0)
    assert w[0] == pytest.approx(-q)
    assert w[1] == pytest.approx(-2.0 * q)
    assert w[2] == pytest.approx(2.0 * q)
    assert w[3] == pytest.approx(q)
    assert w[4] == 0.0


@settings(max_examples=60, derandomize=True, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=5, max_size=5),
       st.floats(300.0, 3500.0))
def test_chemistry_conserves_mass_and_elements(X, T):
    mech = kinetics.load_default_mechanism()
    w = net_production_rates(mech, X, T)
    scale = max(abs(wk * sp.W) for wk, sp in zip(w, mech.species)) or 1.0
    mass_rate = sum(wk * sp.W for wk, sp in zip(w, mech.species))
    assert abs(mass_rate) <= 1e-10 * scale
    for e_idx in range(len(mech.elements)):
        elem_rate = sum(w[k] * mech.element_matrix[k][e_idx]
                        for k in range(len(mech.species)))
        assert abs(elem_rate) <= 1e-10 * max(scale, 1e-30)


def test_rate_monotone_in_reactants(mech):
    rxn = mech.reactions[0]
    prev = -1.0
    for x in (0.0, 0.1, 0.5, 1.0, 2.0):
        q = rate_of_progress(rxn, [x, 0.7, 0, 0, 0], 900.0)
        assert q >= prev
        prev = q


def test_overrides(mech):
    X = [0.5, 0.5, 0.0, 0.0, 0.0]
    w_base = net_production_rates(mech, X, 700.0)
    w_scaled = net_production_rates(mech, X, 700.0, A_override=[243.5],
                                    E_override=[1.68e7])
    assert w_scaled[0] == pytest.approx(2.0 * w_base[0], rel=1e-12)
    with pytest.raises(ContractError):
        net_production_rates(mech, X, 700.0, A_override=[1.0, 2.0])
    with pytest.raises(ContractError):
        net_production_rates(mech, X, 700.0, A_override=[-5.0])


def test_reaction_validation():
    with pytest.raises(MechanismError):
        Reaction(nu_fwd=(0.0, 0.0), nu_rev=(1.0, 0.0), A=1.0, beta=0.0, E=0.0)
    with pytest.raises(MechanismError):
        Reaction(nu_fwd=(-1.0, 1.0), nu_rev=(0.0, 0.0), A=1.0, beta=0.0, E=0.0)
    rxn = Reaction(nu_fwd=(1.0, 2.0), nu_rev=(0.0, 0.0), A=1.0, beta=0.0, E=0.0)
    assert rxn.orders == (1.0, 2.0)   # default to stoichiometric coefficients


def test_mechanism_element_balance_enforced(species_table):
    sp = [species_table[n] for n in ("CH4", "O2", "CO2")]
    bad = Reaction(nu_fwd=(1.0, 1.0, 0.0), nu_rev=(0.0, 0.0, 1.0),
                   A=1.0, beta=0.0, E=0.0)
    with pytest.raises(MechanismError, match="balance"):
        Mechanism(species=tuple(sp), reactions=(bad,))


def test_mechanism_weight_consistency(species_table):
    o2 = species_table["O2"]
    fake = type(o2)(name="O2", W=30.0, nasa_low=o2.nasa_low,
                    nasa_high=o2.nasa_high, T_min=o2.T_min, T_mid=o2.T_mid,
                    T_max=o2.T_max)
    with pytest.raises(MechanismError, match="inconsistent"):
        Mechanism(species=(fake,), reactions=(
            Reaction(nu_fwd=(1.0,), nu_rev=(1.0,), A=1.0, beta=0.0, E=0.0),))


def test_default_mechanism_shape(mech):
    assert mech.species_names == ("CH4", "O2", "H2O", "CO2", "N2")
    assert len(mech.reactions) == 1
    rxn = mech.reactions[0]
    assert rxn.A == 121.75 and rxn.beta == 0.0 and rxn.E == 1.68e7
    assert not rxn.reversible


def test_formula_parser():
    assert kinetics.parse_formula("CH4") == {"C": 1.0, "H": 4.0}
    assert kinetics.parse_formula("H2O") == {"H": 2.0, "O": 1.0}
    with pytest.raises(MechanismError):
        kinetics.parse_formula("Xx7")
