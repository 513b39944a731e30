"""Label-smoothed cross-entropy, batch-hard triplet loss and their weighted sum.

Every loss returns its analytic gradient alongside the value. Both terms are
averaged over the batch.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.special import log_softmax, softmax

from app.errors import BadEpsilon, NoNegative, NoPositive, ShapeMismatch

if TYPE_CHECKING:
    from app.config import EngineConfig


class Batch(BaseModel):
    """Features (N x d), integer labels (N,) and classifier logits (N x K)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    features: np.ndarray
    labels: np.ndarray
    logits: np.ndarray

    @field_validator("features", "logits", mode="before")
    @classmethod
    def as_matrix(cls, v) -> np.ndarray:
        array = np.asarray(v, dtype=np.float64)
        if array.ndim != 2:
            raise ShapeMismatch(f"expected a matrix, got shape {array.shape}")
        return array

    @field_validator("labels", mode="before")
    @classmethod
    def as_labels(cls, v) -> np.ndarray:
        return np.asarray(v, dtype=np.int64).ravel()

    @model_validator(mode="after")
    def check_sizes(self) -> "Batch":
        n = self.labels.shape[0]
        if n < 1 or self.features.shape[0] != n or self.logits.shape[0] != n:
            raise ShapeMismatch("features, labels and logits must share N >= 1 rows")
        if self.labels.min() < 0 or self.labels.max() >= self.logits.shape[1]:
            raise ShapeMismatch(f"labels must lie in [0, {self.logits.shape[1]})")
        return self


class LossValue(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    total: float
    ce: float
    tri: float
    grad_logits: np.ndarray
    grad_features: np.ndarray


def smooth_labels(y: int, num_classes: int, epsilon: float) -> np.ndarray:
    """(1 - eps) on the true class and eps / (K - 1) on every other class."""
    if not 0.0 <= epsilon <= 1.0:
        raise BadEpsilon(epsilon)
    if num_classes < 2:
        raise ShapeMismatch(f"label smoothing needs K >= 2, got {num_classes}")
    if not 0 <= y < num_classes:
        raise ShapeMismatch(f"label {y} outside [0, {num_classes})")
    p = np.full(num_classes, epsilon / (num_classes - 1))
    p[y] = 1.0 - epsilon
    return p


def _smoothed_targets(labels: np.ndarray, num_classes: int, epsilon: float) -> np.ndarray:
    if not 0.0 <= epsilon <= 1.0:
        raise BadEpsilon(epsilon)
    if num_classes < 2:
        raise ShapeMismatch(f"label smoothing needs K >= 2, got {num_classes}")
    targets = np.full((labels.shape[0], num_classes), epsilon / (num_classes - 1))
    targets[np.arange(labels.shape[0]), labels] = 1.0 - epsilon
    return targets


def cross_entropy(logits: np.ndarray, labels: np.ndarray, epsilon: float) -> tuple[float, np.ndarray]:
    """Mean label-smoothed cross-entropy and its gradient (q - p) / N."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    n, k = logits.shape
    targets = _smoothed_targets(labels, k, epsilon)
    log_q = log_softmax(logits, axis=1)
    loss = float(-(targets * log_q).sum() / n)
    grad = (softmax(logits, axis=1) - targets) / n
    return loss, grad


def squared_distances(features: np.ndarray) -> np.ndarray:
    diff = features[:, None, :] - features[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def mine_batch_hard(features: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per anchor: farthest positive and nearest negative (lowest index on ties).

    Returns ``(positive_idx, negative_idx, dist2)``.
    """
    labels = np.asarray(labels).ravel()
    n = labels.shape[0]
    dist2 = squared_distances(features)
    same = labels[:, None] == labels[None, :]
    positive_mask = same & ~np.eye(n, dtype=bool)
    negative_mask = ~same
    for anchor in range(n):
        if not positive_mask[anchor].any():
            raise NoPositive(anchor)
        if not negative_mask[anchor].any():
            raise NoNegative(anchor)
    positive_idx = np.argmax(np.where(positive_mask, dist2, -np.inf), axis=1)
    negative_idx = np.argmin(np.where(negative_mask, dist2, np.inf), axis=1)
    return positive_idx, negative_idx, dist2


def triplet_batch_hard(features: np.ndarray, labels: np.ndarray, margin: float) -> tuple[float, np.ndarray]:
    """Mean hinge(d2_ap - d2_an + m) over anchors, with its subgradient.

    The hinge subgradient at exactly zero is taken as 0.
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    pos, neg, dist2 = mine_batch_hard(features, labels)
    anchors = np.arange(n)
    margins = dist2[anchors, pos] - dist2[anchors, neg] + margin
    active = margins > 0
    loss = float(np.where(active, margins, 0.0).sum() / n)

    grad = np.zeros_like(features)
    a = anchors[active]
    p, q = pos[active], neg[active]
    diff_ap = features[a] - features[p]
    diff_an = features[a] - features[q]
    np.add.at(grad, a, 2.0 * (diff_ap - diff_an))
    np.add.at(grad, p, -2.0 * diff_ap)
    np.add.at(grad, q, 2.0 * diff_an)
    return loss, grad / n


def total_loss(batch: Batch, config: "EngineConfig") -> LossValue:
    """L_all = L_ce + lambda * L_tri with both gradients."""
    ce, grad_logits = cross_entropy(batch.logits, batch.labels, config.epsilon)
    tri, grad_tri = triplet_batch_hard(batch.features, batch.labels, config.margin)
    weight = config.lambda_
    return LossValue(
        total=ce + weight * tri,
        ce=ce,
        tri=tri,
        grad_logits=grad_logits,
        grad_features=weight * grad_tri,
    )
