import numpy as np
import pytest

from rankspec.corpus import write_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Six speech and three noise clips at 16 kHz; returns (speech, noise) manifests."""
    root = tmp_path_factory.mktemp("corpus")
    return write_corpus(root, n_speech=6, n_noise=3, sample_rate_hz=16000, seed=5)
