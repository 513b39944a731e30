"""Appearance distance matrices between query and gallery embeddings."""
from __future__ import annotations

from collections.abc import Sequence
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.spatial.distance import cdist

from app.errors import DimensionMismatch, ShapeMismatch


class DistanceMatrix(BaseModel):
    """Nonnegative (n_query x n_gallery) distances labelled by image id."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    query_ids: tuple[str, ...]
    gallery_ids: tuple[str, ...]

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, v) -> np.ndarray:
        matrix = np.array(v, dtype=np.float64, copy=True)
        if matrix.ndim != 2:
            raise ShapeMismatch(f"distance matrix must be 2-D, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ShapeMismatch("distance matrix holds non-finite entries")
        if np.any(matrix < 0):
            raise ShapeMismatch("distance matrix holds negative entries")
        matrix.setflags(write=False)
        return matrix

    @model_validator(mode="after")
    def check_ids(self) -> "DistanceMatrix":
        if self.values.shape != (len(self.query_ids), len(self.gallery_ids)):
            raise ShapeMismatch(
                f"values shape {self.values.shape} does not match "
                f"{len(self.query_ids)} query / {len(self.gallery_ids)} gallery ids"
            )
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def replace(self, values: np.ndarray) -> "DistanceMatrix":
        """Same ids, new values."""
        return DistanceMatrix(values=values, query_ids=self.query_ids, gallery_ids=self.gallery_ids)


def _default_ids(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(n))


def euclidean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Plain ``||a_i - b_j||_2`` matrix.

    Raises:
        DimensionMismatch: if the two sets differ in embedding length.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"query dim {a.shape[1]} != gallery dim {b.shape[1]}")
    return cdist(a, b, metric="euclidean")


def appearance_distances(
    queries: np.ndarray,
    gallery: np.ndarray,
    query_ids: Optional[Sequence[str]] = None,
    gallery_ids: Optional[Sequence[str]] = None,
) -> DistanceMatrix:
    values = euclidean(queries, gallery)
    return DistanceMatrix(
        values=values,
        query_ids=tuple(query_ids) if query_ids is not None else _default_ids("q", values.shape[0]),
        gallery_ids=tuple(gallery_ids) if gallery_ids is not None else _default_ids("g", values.shape[1]),
    )
