"""Height / width / channel division branches and part pooling."""
from __future__ import annotations

from collections.abc import Sequence
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.appearance.attention import FeatureMap, MapLike, as_feature_map
from app.data.models import Axis
from app.errors import ShapeMismatch, TooManyParts

_AXIS_INDEX = {Axis.CHANNEL: 0, Axis.HEIGHT: 1, Axis.WIDTH: 2}


class PartSet(BaseModel):
    """Contiguous slices of one feature map along ``axis``."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    axis: Axis
    parts: tuple[FeatureMap, ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        index = _AXIS_INDEX[self.axis]
        return tuple(p.dims[index] for p in self.parts)

    @property
    def pooled(self) -> np.ndarray:
        return pool_parts(self)

    def concatenate(self) -> np.ndarray:
        return np.concatenate([p.data for p in self.parts], axis=_AXIS_INDEX[self.axis])


def divide(x: MapLike, axis: Axis, n_parts: int) -> PartSet:
    """Split ``x`` into ``n_parts`` near-equal slices; leading parts absorb the remainder.

    Raises:
        TooManyParts: if ``n_parts`` is below 1 or exceeds the axis size.
    """
    x = as_feature_map(x)
    axis = Axis(axis)
    size = x.dims[_AXIS_INDEX[axis]]
    if n_parts < 1 or n_parts > size:
        raise TooManyParts(n_parts, size, axis.value)
    slices = np.array_split(x.data, n_parts, axis=_AXIS_INDEX[axis])
    return PartSet(axis=axis, parts=tuple(FeatureMap(data=s) for s in slices))


def pool_parts(p: PartSet, projections: Optional[Sequence[Optional[np.ndarray]]] = None) -> np.ndarray:
    """Average-pool every part spatially, one row per part.

    Height and width parts give rows of length C. Channel parts give rows of
    their own channel count; when the split is uneven, shorter rows are
    zero-padded to the leading part's width. ``projections`` optionally maps
    each pooled row through a per-part linear map.
    """
    rows = [part.data.mean(axis=(1, 2)) for part in p.parts]
    if projections is not None:
        if len(projections) != len(rows):
            raise ShapeMismatch(f"{len(projections)} projections for {len(rows)} parts")
        rows = [row if proj is None else np.asarray(proj, dtype=np.float64) @ row for row, proj in zip(rows, projections)]
    width = max(r.shape[0] for r in rows)
    pooled = np.zeros((len(rows), width))
    for i, row in enumerate(rows):
        pooled[i, : row.shape[0]] = row
    return pooled


def _l2_normalize(block: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(block)
    return block / norm if norm > 0 else block


def assemble_embedding(
    coarse: np.ndarray,
    f1: np.ndarray,
    parts: Sequence[np.ndarray] = (),
    normalize: bool = False,
) -> np.ndarray:
    """Concatenate (coarse, f1, part blocks...) into one embedding.

    Empty blocks are skipped; with ``normalize`` each non-empty block is scaled
    to unit L2 norm (all-zero blocks stay zero).
    """
    blocks = [np.asarray(coarse, dtype=np.float64).ravel(), np.asarray(f1, dtype=np.float64).ravel()]
    blocks += [np.asarray(b, dtype=np.float64).ravel() for b in parts]
    blocks = [b for b in blocks if b.size]
    if normalize:
        blocks = [_l2_normalize(b) for b in blocks]
    if not blocks:
        return np.zeros(0)
    return np.concatenate(blocks)
