import numpy as np
import pytest

from mvanova.model import ModelLayout, sample_from_model
from mvanova.validation import MODERATE_HYPERS


@pytest.fixture
def small_layout():
    return ModelLayout(k_shared=1, k_xspec=1, k_yspec=1, k_clusters_x=2, k_clusters_y=2)


@pytest.fixture
def small_design():
    a = np.array([0, 1, 0, 1, 0, 1])
    b = np.array([0, 0, 1, 1, 0, 1])
    return a, b


@pytest.fixture
def small_instance(small_layout, small_design):
    """A moderate-hyperparameter (state, data) pair on a tiny model."""
    a, b = small_design
    state, data = sample_from_model(small_layout, MODERATE_HYPERS, a, b, p_x=5, p_y=4, rng_seed=123)
    return small_layout, MODERATE_HYPERS, state, data
