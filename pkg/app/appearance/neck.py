"""BNNeck: per-dimension standardization between the metric and classifier views."""
from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.errors import DimensionMismatch, EmptyDataset


class BNNeck(BaseModel):
    """Affine standardization with statistics frozen from a training split."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    var: np.ndarray
    eps: float = Field(1e-5, gt=0)

    @field_validator("mean", "var", mode="before")
    @classmethod
    def as_vector(cls, v) -> np.ndarray:
        return np.asarray(v, dtype=np.float64).ravel()

    @classmethod
    def fit(cls, features: np.ndarray, eps: float = 1e-5) -> "BNNeck":
        matrix = np.asarray(features, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] == 0:
            raise EmptyDataset("BNNeck needs a non-empty (n, d) training matrix")
        return cls(mean=matrix.mean(axis=0), var=matrix.var(axis=0), eps=eps)

    @property
    def scale(self) -> np.ndarray:
        """Per-dimension 1 / std, the Jacobian diagonal of the standardization."""
        return 1.0 / np.sqrt(self.var + self.eps)

    def __call__(self, features: np.ndarray) -> np.ndarray:
        matrix = np.asarray(features, dtype=np.float64)
        if matrix.shape[-1] != self.mean.shape[0]:
            raise DimensionMismatch(f"BNNeck fitted on dim {self.mean.shape[0]}, got {matrix.shape[-1]}")
        return (matrix - self.mean) * self.scale
