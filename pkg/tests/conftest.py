import pytest
import numpy as np
from os.path import dirname, join


@pytest.fixture(scope='session')
def data_dir():
    return join(dirname(__file__), 'data')


@pytest.fixture(scope='function')
def rng():
    """Seeded generator so randomized property checks are repeatable"""
    return np.random.default_rng(20240521)
