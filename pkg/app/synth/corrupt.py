"""Feature-level contamination: replace a seeded fraction of embeddings by noise."""
from __future__ import annotations

import math

import numpy as np

from app.data.models import Dataset
from app.errors import InvalidParameter


def corrupted_count(n: int, fraction: float) -> int:
    """round(fraction * n), halves rounded up."""
    return int(math.floor(fraction * n + 0.5))


def corrupt(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Swap ``corrupted_count`` rows for draws from N(m, s^2 I).

    ``m`` is the per-dimension mean of the clean embeddings and ``s`` the
    standard deviation over all their entries, so every dimension gets the
    same spread. Rows are the prefix of one seeded permutation: for a fixed
    seed a larger fraction corrupts a superset of rows.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidParameter(f"fraction must lie in [0, 1], got {fraction}")
    count = corrupted_count(len(dataset), fraction)
    if count == 0:
        return dataset
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(dataset))[:count]
    source = dataset.embeddings
    noise = rng.normal(source.mean(axis=0), source.std(), size=(count, dataset.dim))
    embeddings = source.copy()
    embeddings[chosen] = noise
    return dataset.with_embeddings(embeddings)
