# conftest.py
# Shared fixtures. Slow reproductions are skipped unless
# DEEPEXPRESS_SLOW_TESTS=1 is set in the environment or backend/.env.

import numpy as np
import pytest

from config import SLOW_TESTS
from forecaster.generator import GeneratorSpec, generate_synthetic
from forecaster.model import ModelConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes-long synthetic reproductions")


def pytest_collection_modifyitems(config, items):
    if SLOW_TESTS:
        return
    skip = pytest.mark.skip(reason="set DEEPEXPRESS_SLOW_TESTS=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def synthetic():
    return generate_synthetic(GeneratorSpec(length=120, seed=3))


@pytest.fixture
def dataset(synthetic):
    return synthetic[0]


@pytest.fixture
def tiny_config():
    return ModelConfig(h=4, l=1, k=2, enc_hidden=3, embedding_dim=2, workday_hidden=2, dropout=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
