"""Shared fixtures: small hand-built datasets and graphs."""
from __future__ import annotations

import numpy as np
import pytest

from app.config import EngineConfig
from app.data.models import CameraGraph, Dataset, FeatureRecord


def make_dataset(rows, embeddings=None) -> Dataset:
    """``rows`` are (image_id, vehicle_id, camera_id, timestamp) tuples."""
    records = [FeatureRecord(image_id=i, vehicle_id=v, camera_id=c, timestamp=t) for i, v, c, t in rows]
    if embeddings is None:
        embeddings = np.zeros((len(records), 1))
    return Dataset.from_records(records, np.asarray(embeddings, dtype=np.float64))


@pytest.fixture
def config() -> EngineConfig:
    return EngineConfig(_env_file=None)


@pytest.fixture
def triangle_graph() -> CameraGraph:
    return CameraGraph.from_edges([("c1", "c2", 500.0), ("c1", "c3", 800.0), ("c2", "c3", 400.0)])


@pytest.fixture
def small_dataset() -> Dataset:
    rows = [
        ("a1", "v1", "c1", 100.0),
        ("a2", "v1", "c2", 400.0),
        ("a3", "v1", "c3", 900.0),
        ("b1", "v2", "c1", 150.0),
        ("b2", "v2", "c3", 700.0),
        ("b3", "v2", "c2", 1000.0),
    ]
    embeddings = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.2], [3.0, 3.0], [3.1, 3.0], [3.0, 2.8]]
    return make_dataset(rows, embeddings)
