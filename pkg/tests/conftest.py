import numpy as np
import pytest

from ssvepcca.data import Epoch
from ssvepcca.simgen import GeneratorConfig, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_epoch(rng, n_channels=4, n_samples=200, fs=250.0, labels=None, stim=None):
    labels = labels or [f"ch{i}" for i in range(n_channels)]
    return Epoch(rng.standard_normal((n_channels, n_samples)), labels, fs, stim)


@pytest.fixture(scope="session")
def small_dataset():
    """Four targets, six runs, 8 channels, 2 s trials at moderate SNR."""
    cfg = GeneratorConfig(runs=6, trial_seconds=2.0, snr_db=-5.0, seed=3)
    return generate(cfg)
