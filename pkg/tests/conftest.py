import os
import sys
from datetime import date, datetime, timedelta

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.core.types import ActivityMatrix, DeviceRole, DeviceSpec, HourlyLoadSeries  # noqa: E402
from src.evaluation.synthetic import SyntheticConfig, generate_synthetic  # noqa: E402

START = date(2015, 1, 1)


def matrix_from_rows(rows, start=START) -> ActivityMatrix:
    rows = np.asarray(rows, dtype=np.uint8).reshape(-1, 24)
    return ActivityMatrix(tuple(start + timedelta(days=i) for i in range(len(rows))), rows)


def hourly_series(device, values, start=datetime(2015, 1, 1)) -> HourlyLoadSeries:
    return HourlyLoadSeries(device, start, np.asarray(values, dtype=float))


@pytest.fixture
def washer() -> DeviceSpec:
    return DeviceSpec("washer", "h1", DeviceRole.SHIFTABLE, 100.0, duration_k=1)


@pytest.fixture(scope="session")
def closed_form_dataset():
    return generate_synthetic(SyntheticConfig(days=45))


@pytest.fixture(scope="session")
def closed_form_household(closed_form_dataset):
    return closed_form_dataset.prepare()


@pytest.fixture(scope="session")
def noisy_household():
    config = SyntheticConfig(days=40, availability_hours=tuple(range(7, 23)), availability_noise=0.1,
                             usage_probability=0.6, seed=3)
    return generate_synthetic(config).prepare()


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    path = tmp_path / "cache"
    monkeypatch.setenv("SHIFTWISE_CACHE_DIR", str(path))
    return path
