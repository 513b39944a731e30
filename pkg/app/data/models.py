# data/models.py
"""Domain types shared across the engine.

Records, datasets and camera graphs are immutable pydantic models; array
payloads are numpy arrays flagged read-only after validation.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.errors import (
    AsymmetricConflict,
    DuplicateImageId,
    EmptyDataset,
    MissingCameraDistance,
    NonFiniteValue,
    NonPositiveDistance,
    ShapeMismatch,
    UnknownImageId,
)


def _frozen(array: np.ndarray) -> np.ndarray:
    """Return a read-only float64 copy of ``array``."""
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


# --- Domain enums ---
class AttentionOrder(str, Enum):
    CHANNEL_THEN_SPATIAL = "channel_then_spatial"
    SPATIAL_THEN_CHANNEL = "spatial_then_channel"
    PARALLEL = "parallel"


class Axis(str, Enum):
    HEIGHT = "height"
    WIDTH = "width"
    CHANNEL = "channel"


class DensityNorm(str, Enum):
    RAW = "raw"
    PEAK = "peak"


class Pairing(str, Enum):
    ALL = "all"
    CONSECUTIVE = "consecutive"


class Protocol(str, Enum):
    CROSS_CAMERA = "cross-camera"
    ALL = "all"


class FeatureRecord(BaseModel):
    """One image: identity label, camera, timestamp and (optionally) its embedding."""

    model_config = ConfigDict(frozen=True)

    image_id: str = Field(..., min_length=1)
    vehicle_id: str = Field(..., min_length=1, description="Identity label")
    camera_id: str = Field(..., min_length=1)
    timestamp: float = Field(..., ge=0, allow_inf_nan=False, description="Seconds since epoch")
    embedding: Optional[tuple[float, ...]] = None

    @field_validator("image_id", "vehicle_id", "camera_id", mode="before")
    @classmethod
    def strip_strings(cls, v):
        if isinstance(v, str):
            return v.strip()
        return v


class Dataset(BaseModel):
    """Ordered records plus their row-aligned embedding matrix (n x dim)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    records: tuple[FeatureRecord, ...]
    embeddings: np.ndarray

    @field_validator("records")
    @classmethod
    def check_records(cls, v: tuple[FeatureRecord, ...]) -> tuple[FeatureRecord, ...]:
        if not v:
            raise EmptyDataset()
        seen: set[str] = set()
        for record in v:
            if record.image_id in seen:
                raise DuplicateImageId(record.image_id)
            seen.add(record.image_id)
        return v

    @field_validator("embeddings", mode="before")
    @classmethod
    def check_embeddings(cls, v) -> np.ndarray:
        matrix = np.asarray(v, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] < 1:
            raise ShapeMismatch(f"embeddings must be a 2-D matrix with dim >= 1, got shape {matrix.shape}")
        bad = np.argwhere(~np.isfinite(matrix))
        if bad.size:
            raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))
        return _frozen(matrix)

    @model_validator(mode="after")
    def check_alignment(self) -> "Dataset":
        if self.embeddings.shape[0] != len(self.records):
            raise ShapeMismatch(
                f"{len(self.records)} records but {self.embeddings.shape[0]} embedding rows"
            )
        return self

    @classmethod
    def from_records(cls, records: Sequence[FeatureRecord], embeddings: Optional[np.ndarray] = None) -> "Dataset":
        """Build a dataset; embeddings default to those carried by the records."""
        if embeddings is None:
            if not records:
                raise EmptyDataset()
            if any(r.embedding is None for r in records):
                raise ShapeMismatch("records carry no embeddings")
            embeddings = np.array([r.embedding for r in records], dtype=np.float64)
        stripped = tuple(r.model_copy(update={"embedding": None}) if r.embedding is not None else r for r in records)
        return cls(records=stripped, embeddings=embeddings)

    # --- convenience accessors ---
    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index: int) -> FeatureRecord:
        return self.records[index].model_copy(update={"embedding": tuple(self.embeddings[index].tolist())})

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    @property
    def image_ids(self) -> list[str]:
        return [r.image_id for r in self.records]

    @cached_property
    def vehicle_ids(self) -> np.ndarray:
        out = np.array([r.vehicle_id for r in self.records], dtype=object)
        out.setflags(write=False)
        return out

    @cached_property
    def camera_ids(self) -> np.ndarray:
        out = np.array([r.camera_id for r in self.records], dtype=object)
        out.setflags(write=False)
        return out

    @cached_property
    def timestamps(self) -> np.ndarray:
        return _frozen(np.array([r.timestamp for r in self.records], dtype=np.float64))

    def index_of(self, image_id: str) -> int:
        try:
            return self._positions[image_id]
        except KeyError:
            raise UnknownImageId(image_id) from None

    def indices_of(self, image_ids: Iterable[str]) -> np.ndarray:
        return np.array([self.index_of(i) for i in image_ids], dtype=np.int64)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(records=tuple(self.records[i] for i in idx), embeddings=self.embeddings[idx])

    def with_embeddings(self, embeddings: np.ndarray) -> "Dataset":
        return Dataset(records=self.records, embeddings=embeddings)

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {r.image_id: i for i, r in enumerate(self.records)}


class CameraGraph(BaseModel):
    """Symmetric shortest road distances (meters) between cameras."""

    model_config = ConfigDict(frozen=True)

    cameras: frozenset[str]
    distances: Mapping[tuple[str, str], float] = Field(
        ..., description="Distance per unordered pair, keyed with the smaller id first"
    )

    @model_validator(mode="after")
    def check_pairs(self) -> "CameraGraph":
        for (a, b), value in self.distances.items():
            if a >= b:
                raise ShapeMismatch(f"pair ({a}, {b}) must be keyed with the smaller id first")
            if a not in self.cameras or b not in self.cameras:
                raise MissingCameraDistance(a, b)
            if not np.isfinite(value) or value <= 0:
                raise NonPositiveDistance(a, b, value)
        return self

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str, float]], cameras: Iterable[str] = ()) -> "CameraGraph":
        """Apply the symmetric closure to ``(a, b, meters)`` edges.

        Raises:
            AsymmetricConflict: if a pair appears twice with different values.
            NonPositiveDistance: if a distance is not strictly positive.
        """
        distances: dict[tuple[str, str], float] = {}
        names = set(cameras)
        for a, b, value in edges:
            if a == b:
                raise NonPositiveDistance(a, b, value)
            if not np.isfinite(value) or value <= 0:
                raise NonPositiveDistance(a, b, value)
            key = (a, b) if a < b else (b, a)
            if key in distances and distances[key] != value:
                raise AsymmetricConflict(a, b)
            distances[key] = float(value)
            names.update((a, b))
        return cls(cameras=frozenset(names), distances=distances)

    def distance(self, a: str, b: str) -> float:
        if a == b:
            return 0.0
        key = (a, b) if a < b else (b, a)
        try:
            return self.distances[key]
        except KeyError:
            raise MissingCameraDistance(a, b) from None

    def edges(self) -> list[tuple[str, str, float]]:
        """Unordered pairs sorted by camera ids."""
        return [(a, b, v) for (a, b), v in sorted(self.distances.items())]
