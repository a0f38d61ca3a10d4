import numpy as np
import pytest

from fedfront.data import synth_dataset
from fedfront.harness import THREADS_ENV_VAR, prepare_experiment


@pytest.fixture(autouse=True)
def _serial_sweeps(monkeypatch):
    # Tests opt into parallel sweeps explicitly.
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)


@pytest.fixture(scope="session")
def small_records():
    return synth_dataset(600, 0.1, seed=11)


@pytest.fixture(scope="session")
def small_experiment(small_records):
    return prepare_experiment(small_records, num_clients=3, split_seed=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
