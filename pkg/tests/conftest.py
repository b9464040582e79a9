import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dvpr.datagen import make_loop_trajectory, random_mixture, restrict_to_subspace, sample_mixture  # noqa: E402

# Synthetic stand-in for the training/deployment data behind the robot-count sweeps.
SWEEP_DIM = 128
SWEEP_PLACES = 1000  # two passes -> 2000 frames
SWEEP_NOISE = 0.4
SWEEP_ACTIVE_DIMS = 32


@pytest.fixture(scope="session")
def sweep_mixture():
    return random_mixture(SWEEP_DIM, 16, seed=1, mean_scale=1.0, spread=1.0)


@pytest.fixture(scope="session")
def sweep_training(sweep_mixture):
    return sample_mixture(sweep_mixture, 4000, seed=3)


@pytest.fixture(scope="session")
def shift_free_loop(sweep_mixture):
    return make_loop_trajectory(sweep_mixture, SWEEP_PLACES, 2, SWEEP_NOISE, seed=2)


@pytest.fixture(scope="session")
def shifted_loop(sweep_mixture):
    deploy = restrict_to_subspace(sweep_mixture, range(SWEEP_ACTIVE_DIMS))
    return make_loop_trajectory(deploy, SWEEP_PLACES, 2, SWEEP_NOISE, seed=2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from _acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
