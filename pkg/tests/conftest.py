import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from bandService import find_band  # noqa: E402
from potentialModel import UnitCell  # noqa: E402
from resonanceService import find_resonances  # noqa: E402

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "configs"))


@pytest.fixture(scope="session")
def gaas_cell():
    return UnitCell.gaas_superlattice()


@pytest.fixture(scope="session")
def gaas_window(gaas_cell):
    return find_band(gaas_cell, 1)


@pytest.fixture(scope="session")
def gaas_levels(gaas_cell, gaas_window):
    return find_resonances(gaas_cell, 6, window=gaas_window)


@pytest.fixture(scope="session")
def free_cell():
    return UnitCell.free(9.0)


@pytest.fixture(scope="session")
def free_window(free_cell):
    return find_band(free_cell, 1)


@pytest.fixture
def config_path():
    return lambda name: os.path.join(CONFIG_DIR, name)
