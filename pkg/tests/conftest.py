import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import presets  # noqa: E402
from model import Deterministic, Erlang, Exponential, HyperExponential, NetworkModel, Uniform  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def mm_two_station():
    """M/M fork-join de 2 estações, mu = 1.4 (rho ~ 0.714)."""
    return presets.two_station(1.4)


@pytest.fixture
def mm1():
    return NetworkModel(Exponential(1.0), (Exponential(1.0),), (1.4,))


@pytest.fixture
def empty_model():
    """D/D/1 sempre vazio: chega um job a cada 2, serviço 1."""
    return NetworkModel(Deterministic(2.0), (Deterministic(1.0),), (1.0,))


@pytest.fixture
def mixed_model():
    return NetworkModel(
        Erlang(2, 2.0),
        (Uniform(0.2, 1.0), HyperExponential((0.3, 0.7), (0.8, 3.0)), Exponential(1.5)),
        (1.0, 1.2, 2.0),
    )


PATH_CONFIGS = {
    "mm1": NetworkModel(Exponential(1.0), (Exponential(1.0),), (1.4,)),
    "mm2": presets.two_station(1.8),
    "ten": presets.ten_station(),
    "mixed": NetworkModel(
        Erlang(2, 2.0),
        (Uniform(0.2, 1.0), HyperExponential((0.3, 0.7), (0.8, 3.0)), Exponential(1.5)),
        (1.0, 1.2, 2.0),
    ),
    "deterministic-arrivals": NetworkModel(Deterministic(1.0), (Exponential(2.0), Erlang(3, 5.0)), (1.0, 1.0)),
    "hyper-zero-weight": NetworkModel(Exponential(1.0), (HyperExponential((1.0, 0.0), (3.0, 0.5)),), (1.0,)),
}
