"""Shared fixtures."""

import numpy as np
import pytest
import yaml

from core.ordinal import BinPartition


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def partition():
    return BinPartition(-1.0, 1.0, 10)


@pytest.fixture
def sine_series():
    t = np.arange(2000)
    return np.sin(2 * np.pi * t / 50.0)


@pytest.fixture
def write_config(tmp_path):
    """Write a (partial) config mapping to YAML and return its path."""
    def _write(data: dict, name: str = "config.yaml"):
        data = dict(data)
        data.setdefault("logging", {"level": "WARNING", "file": None})
        data.setdefault("storage", {"database_path": str(tmp_path / "runs.db")})
        data.setdefault("experiment", {})
        data["experiment"].setdefault("output_dir", str(tmp_path / "out"))
        path = tmp_path / name
        with open(path, "w") as f:
            yaml.safe_dump(data, f)
        return path
    return _write
