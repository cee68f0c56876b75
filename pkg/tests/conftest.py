import numpy as np
import pytest

from ftnslp.channel import Dimensions
from ftnslp.pulse import PulseSpec, build_pulse_tables
from ftnslp.sim import ScenarioConfig


@pytest.fixture(scope="session")
def spec09():
    return PulseSpec(rolloff=0.3, nominal_period=1e-3, compression=0.9, half_width=3)


@pytest.fixture(scope="session")
def spec08():
    return PulseSpec(rolloff=0.3, nominal_period=1e-3, compression=0.8, half_width=3)


@pytest.fixture(scope="session")
def spec_nyquist():
    return PulseSpec(rolloff=0.3, nominal_period=1e-3, compression=1.0, half_width=3)


@pytest.fixture(scope="session")
def dims_default():
    # N_t=3, K=2, L=15, P=3, Q=3 working point used throughout the experiments
    return Dimensions(n_tx=3, n_rx=8, n_users=2, block_len=15, taps=3, half_width=3)


@pytest.fixture(scope="session")
def tables_default(spec09, dims_default):
    return build_pulse_tables(spec09, dims_default.block_len, dims_default.l1)


@pytest.fixture(scope="session")
def scenario_default():
    return ScenarioConfig()  # defaults are the standard working point


def rng_of(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
