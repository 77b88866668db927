import numpy as np
import pytest

from townsim.config import ScenarioConfig
from townsim.network import ContactNetwork, generate_ba


@pytest.fixture(scope="session")
def town_net():
    """Default-size contact network shared by simulation tests."""
    return generate_ba(10_000, 5.0, seed=0)


@pytest.fixture
def small_cfg():
    return ScenarioConfig(n=1000, days=200, rng_seed=7)


def empty_network(n):
    return ContactNetwork.from_edges(n, [])


def ring(n):
    return ContactNetwork.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
