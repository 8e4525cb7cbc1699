"""Shared fixtures for the unit and integration suites."""

import numpy as np
import pytest
from vemse_core.vae import init_model


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model():
    """F=4, L=2, 6 hidden units: small enough for finite-difference checks."""
    return init_model(n_freqs=4, latent_dim=2, hidden=6, seed=3)


@pytest.fixture
def small_model():
    """A randomly initialised model on a 16-sample frame (F=9)."""
    return init_model(n_freqs=9, latent_dim=3, hidden=12, seed=5)
