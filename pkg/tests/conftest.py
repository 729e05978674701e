import pytest
import os
import sys
import math

import numpy as np

# Add src to Python path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from info_transition.hilbert.state import PureState
from info_transition.measurement.chain import ChainSpec
from info_transition.resources.constants import PhysicalConstants
from info_transition.utils.config import Settings
from info_transition.utils.rng import SeededRNG

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), '..', 'scenarios')


@pytest.fixture(scope="session")
def test_settings():
    """Settings with defaults, independent of any .env file"""
    return Settings(_env_file=None, output_dir="test-runs", max_workers=2)


@pytest.fixture(scope="session")
def constants():
    """Built-in constants table"""
    return PhysicalConstants()


@pytest.fixture
def rng():
    """Seeded generator shared by randomized tests"""
    return SeededRNG(20240601)


@pytest.fixture
def bell_state():
    """(|00> + |11>) / sqrt2"""
    return PureState.from_amplitudes((2, 2), [1, 0, 0, 1])


@pytest.fixture
def ghz_state():
    """Three-qubit GHZ state"""
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = 1 / math.sqrt(2)
    return PureState((2, 2, 2), amps)


@pytest.fixture
def born_system():
    """Three-outcome system with Born weights 0.5 / 0.3 / 0.2"""
    return PureState.from_amplitudes((3,), [math.sqrt(0.5), math.sqrt(0.3), math.sqrt(0.2)])


@pytest.fixture
def qubit_chain():
    """Fully decohered chain for a qubit, one apparatus and environment microstate"""
    return ChainSpec.uniform(2)


@pytest.fixture
def scenario_dir():
    """Bundled example scenario files"""
    return os.path.abspath(SCENARIO_DIR)


@pytest.fixture
def out_dir(tmp_path):
    """Empty output directory for a run"""
    path = tmp_path / "run"
    return str(path)
