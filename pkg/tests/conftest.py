import hypothesis
import pytest

from beamalign.config import load_config

hypothesis.settings.register_profile(
    "deterministic", derandomize=True, max_examples=50, deadline=None
)
hypothesis.settings.load_profile("deterministic")


@pytest.fixture
def default_config():
    return load_config()


@pytest.fixture
def quiet_config():
    cfg = load_config()
    cfg.noise_sigma = 0.0
    return cfg


@pytest.fixture
def geometry(default_config):
    return default_config.geometry
