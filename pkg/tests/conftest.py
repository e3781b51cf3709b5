import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dpevolve import BallWorld, Embedder, SimulatedBackend, SimulatedBackendConfig


@pytest.fixture
def ball2d():
    return BallWorld(np.zeros(2), 1.0)


@pytest.fixture
def backend2d(ball2d):
    return SimulatedBackend(SimulatedBackendConfig(ball2d, variations_per_scale=16, eta=0.05))


@pytest.fixture
def identity2d():
    return Embedder(2)
