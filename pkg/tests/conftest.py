import pytest

from ignition0d.kinetics import load_default_mechanism
from ignition0d.scenario import load_scenario
from ignition0d.thermo import load_default_species


@pytest.fixture(scope="session")
def species_table():
    return load_default_species()


@pytest.fixture(scope="session")
def mech(species_table):
    return load_default_mechanism(species_table)


@pytest.fixture(scope="session")
def scenario():
    return load_scenario()
