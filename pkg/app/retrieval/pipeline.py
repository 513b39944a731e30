"""Distances -> fusion -> optional re-ranking -> ranking, as one call."""
from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING, Optional

import numpy as np

from app.data.models import CameraGraph, Dataset
from app.errors import EmptyDataset
from app.logger import logger
from app.retrieval.distance import DistanceMatrix, appearance_distances
from app.retrieval.fusion import fuse, normalize_rows
from app.retrieval.ranking import RankingResult, rank
from app.retrieval.rerank import k_reciprocal_rerank
from app.spatiotemporal.model import STModel

if TYPE_CHECKING:
    from app.config import EngineConfig


def split_gallery(dataset: Dataset, query_ids: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the queries and of every other record, which form the gallery."""
    q = dataset.indices_of(query_ids)
    mask = np.ones(len(dataset), dtype=bool)
    mask[q] = False
    g = np.flatnonzero(mask)
    if q.size == 0:
        raise EmptyDataset("no queries given")
    if g.size == 0:
        raise EmptyDataset("every record is a query; the gallery is empty")
    return q, g


def _block(dataset: Dataset, rows: np.ndarray, cols: np.ndarray) -> DistanceMatrix:
    ids = dataset.image_ids
    return appearance_distances(
        dataset.embeddings[rows],
        dataset.embeddings[cols],
        query_ids=[ids[i] for i in rows],
        gallery_ids=[ids[j] for j in cols],
    )


def rank_pipeline(
    dataset: Dataset,
    query_ids: Sequence[str],
    graph: Optional[CameraGraph],
    model: Optional[STModel],
    config: "EngineConfig",
) -> RankingResult:
    """Rank the gallery for each query.

    Without a model (or with ``omega == 0``) only appearance is used. When
    re-ranking is on, the default order is fuse then re-rank; with
    ``config.rerank_first`` the appearance blocks are re-ranked before fusing.
    """
    q, g = split_gallery(dataset, query_ids)
    blocks = {"qg": _block(dataset, q, g)}
    if config.rerank:
        blocks["qq"] = _block(dataset, q, q)
        blocks["gg"] = _block(dataset, g, g)
    logger.info("ranking %d queries against %d gallery images", q.size, g.size)

    def fused(d: DistanceMatrix) -> DistanceMatrix:
        if model is None or graph is None:
            return normalize_rows(d) if config.normalize_rows else d
        return fuse(d, dataset, graph, model, normalize=config.normalize_rows)

    def reranked(qg: DistanceMatrix, qq: DistanceMatrix, gg: DistanceMatrix) -> DistanceMatrix:
        return k_reciprocal_rerank(qg, qq, gg, k1=config.k1, k2=config.k2, lambda_rr=config.lambda_rr)

    if not config.rerank:
        final = fused(blocks["qg"])
    elif config.rerank_first:
        final = fused(reranked(blocks["qg"], blocks["qq"], blocks["gg"]))
    else:
        final = reranked(fused(blocks["qg"]), fused(blocks["qq"]), fused(blocks["gg"]))
    return rank(final)
