"""Shared fixtures: desk-scale config, small synthetic datasets, float64 precision."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from autodiff.tensor import precision
from phase1_synthetic_data.generators.eeg_generator import SyntheticSpec, generate_synthetic
from phase3_model.config import preset


@pytest.fixture
def desk_config():
    return preset("desk")


@pytest.fixture(scope="session")
def tiny_dataset():
    """4 subjects x 8 trials, 129 x 64, noise-free."""
    return generate_synthetic(SyntheticSpec(n_subjects=4, trials_per_subject=8, seed=3))


@pytest.fixture(scope="session")
def synthetic_dataset():
    """The acceptance dataset: 10 subjects x 50 trials, noise-free."""
    return generate_synthetic(SyntheticSpec(n_subjects=10, trials_per_subject=50, seed=7))


@pytest.fixture
def float64():
    with precision(np.float64):
        yield
