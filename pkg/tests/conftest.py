import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plumeplace.config import ExperimentConfig


@pytest.fixture
def desk_config():
    return ExperimentConfig().with_profile("desk")


@pytest.fixture
def tiny_config():
    """Shrunk scenario for fast CLI and integration tests."""
    return ExperimentConfig(
        placement_members=60,
        enkf_members=80,
        n_steps=5,
        bo_init=4,
        bo_iters=3,
        bo_candidates=64,
        grid_nx=5,
        grid_ny=7,
        n_sensors=2,
    )
