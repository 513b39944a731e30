"""Plain gradient descent over a linear embedder and a linear classification head."""
from __future__ import annotations

import csv
from collections.abc import Sequence
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.appearance.neck import BNNeck
from app.config import EngineConfig
from app.data.models import Dataset
from app.errors import InvalidParameter, NoNegative, NoPositive
from app.logger import logger
from app.training.losses import Batch, cross_entropy, total_loss


class Objective(str, Enum):
    ALL = "all"
    CE = "ce"


class TraceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    epoch: int
    total: float
    ce: float
    tri: float


class TrainResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    embedder: np.ndarray
    head: np.ndarray
    classes: tuple[str, ...]
    trace: tuple[TraceRow, ...]

    def embed(self, inputs: np.ndarray) -> np.ndarray:
        return np.asarray(inputs, dtype=np.float64) @ self.embedder.T


def init_embedder(d_out: int, d_in: int, seed: int) -> np.ndarray:
    """Identity plus small seeded noise (scaled Gaussian when not square)."""
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_out, d_in))
    if d_out == d_in:
        return np.eye(d_in) + 0.1 * noise
    return noise


def init_head(num_classes: int, d_out: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed + 1)
    return rng.normal(0.0, 0.01, size=(num_classes, d_out))


def encode_labels(vehicle_ids: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    classes = tuple(sorted(set(vehicle_ids)))
    lookup = {c: i for i, c in enumerate(classes)}
    return np.array([lookup[v] for v in vehicle_ids], dtype=np.int64), classes


def sample_pk_batch(labels: np.ndarray, p: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of a P identities x K images batch.

    Identities with fewer than K images are sampled with replacement.
    """
    classes = np.unique(labels)
    if p > classes.size:
        raise InvalidParameter(f"batch asks for {p} identities, only {classes.size} available")
    chosen = rng.choice(classes, size=p, replace=False)
    picks = []
    for c in chosen:
        members = np.flatnonzero(labels == c)
        picks.append(rng.choice(members, size=k, replace=members.size < k))
    return np.concatenate(picks)


def _check_trainable(labels: np.ndarray) -> None:
    counts = np.bincount(labels)
    if counts.size < 2:
        raise NoNegative(0)
    lonely = np.flatnonzero(counts[labels] < 2)
    if lonely.size:
        raise NoPositive(int(lonely[0]))


def _evaluate(
    inputs: np.ndarray,
    labels: np.ndarray,
    embedder: np.ndarray,
    head: np.ndarray,
    config: EngineConfig,
    objective: Objective,
    neck: Optional[BNNeck],
) -> tuple[TraceRow, np.ndarray, np.ndarray]:
    """Loss at the current parameters plus gradients for (embedder, head)."""
    features = inputs @ embedder.T
    view = neck(features) if neck is not None else features
    logits = view @ head.T
    if objective is Objective.CE:
        ce, grad_logits = cross_entropy(logits, labels, config.epsilon)
        row = TraceRow(epoch=0, total=ce, ce=ce, tri=0.0)
        grad_features = np.zeros_like(features)
    else:
        value = total_loss(Batch(features=features, labels=labels, logits=logits), config)
        row = TraceRow(epoch=0, total=value.total, ce=value.ce, tri=value.tri)
        grad_logits, grad_features = value.grad_logits, value.grad_features
    grad_view = grad_logits @ head
    if neck is not None:
        grad_view = grad_view * neck.scale
    grad_features = grad_view + grad_features
    grad_head = grad_logits.T @ view
    grad_embedder = grad_features.T @ inputs
    return row, grad_embedder, grad_head


def train_toy(
    dataset: Dataset,
    config: EngineConfig,
    epochs: int,
    objective: Union[Objective, str] = Objective.ALL,
) -> TrainResult:
    """Train ``W`` (and the head) by gradient descent on the dataset embeddings.

    The trace row for epoch ``e`` holds the full-dataset loss after ``e``
    update epochs, so ``epochs=0`` yields the loss at initialization.
    """
    if epochs < 0:
        raise InvalidParameter(f"epochs must be >= 0, got {epochs}")
    objective = Objective(objective)
    inputs = dataset.embeddings
    labels, classes = encode_labels(list(dataset.vehicle_ids))
    _check_trainable(labels)

    d_in = dataset.dim
    d_out = config.embed_dim or d_in
    embedder = init_embedder(d_out, d_in, config.seed)
    head = init_head(len(classes), d_out, config.seed)
    rng = np.random.default_rng(config.seed + 2)
    lr = config.learning_rate

    def fitted_neck() -> Optional[BNNeck]:
        return BNNeck.fit(inputs @ embedder.T) if config.bnneck else None

    trace: list[TraceRow] = []
    for epoch in range(epochs + 1):
        neck = fitted_neck()
        row, grad_w, grad_h = _evaluate(inputs, labels, embedder, head, config, objective, neck)
        trace.append(row.model_copy(update={"epoch": epoch}))
        logger.debug("epoch %d total=%.6f ce=%.6f tri=%.6f", epoch, row.total, row.ce, row.tri)
        if epoch == epochs:
            break
        if config.batch_p == 0:
            embedder = embedder - lr * grad_w
            head = head - lr * grad_h
            continue
        steps = max(1, len(classes) // config.batch_p)
        for _ in range(steps):
            idx = sample_pk_batch(labels, config.batch_p, config.batch_k, rng)
            _, grad_w, grad_h = _evaluate(inputs[idx], labels[idx], embedder, head, config, objective, neck)
            embedder = embedder - lr * grad_w
            head = head - lr * grad_h

    logger.info(
        "trained %d epochs: total %.6f -> %.6f", epochs, trace[0].total, trace[-1].total
    )
    return TrainResult(embedder=embedder, head=head, classes=classes, trace=tuple(trace))


def write_trace(path: Union[str, Path], trace: Sequence[TraceRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "total", "ce", "tri"])
        for row in trace:
            writer.writerow([row.epoch, repr(row.total), repr(row.ce), repr(row.tri)])
