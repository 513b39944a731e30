"""Two-stream appearance forward pass over a single feature map."""
from __future__ import annotations

from collections.abc import Sequence
from typing import Optional

import numpy as np

from app.appearance.attention import (
    ChannelAttentionWeights,
    MapLike,
    SpatialAttentionWeights,
    as_feature_map,
    attention_block,
    global_average_pool,
)
from app.appearance.division import assemble_embedding, divide, pool_parts
from app.data.models import AttentionOrder, Axis


def extract_embedding(
    x: MapLike,
    cw: ChannelAttentionWeights,
    sw: SpatialAttentionWeights,
    parts: tuple[int, int, int] = (2, 2, 2),
    order: Optional[AttentionOrder] = AttentionOrder.CHANNEL_THEN_SPATIAL,
    normalize: bool = False,
) -> np.ndarray:
    """Coarse GAP, attended GAP, then height / width / channel part blocks.

    ``parts`` holds the (height, width, channel) part counts; a count of 0
    drops that branch. ``order=None`` skips attention entirely.
    """
    x = as_feature_map(x)
    attended = x if order is None else attention_block(x, cw, sw, order)
    blocks: list[np.ndarray] = []
    for axis, n_parts in zip((Axis.HEIGHT, Axis.WIDTH, Axis.CHANNEL), parts):
        if n_parts:
            blocks.append(pool_parts(divide(attended, axis, n_parts)))
    return assemble_embedding(global_average_pool(x), global_average_pool(attended), blocks, normalize=normalize)


def extract_embeddings(
    maps: Sequence[MapLike] | np.ndarray,
    cw: ChannelAttentionWeights,
    sw: SpatialAttentionWeights,
    parts: tuple[int, int, int] = (2, 2, 2),
    order: Optional[AttentionOrder] = AttentionOrder.CHANNEL_THEN_SPATIAL,
    normalize: bool = False,
) -> np.ndarray:
    return np.stack([extract_embedding(m, cw, sw, parts, order, normalize) for m in maps])
