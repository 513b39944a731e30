"""k-reciprocal re-ranking with local query expansion.

Neighbour sets are built on the joint (query + gallery) distance matrix with
each row scaled by its maximum. The Jaccard distance between expanded
neighbour encodings is then blended with the original query-gallery
distances: ``final = (1 - lambda_rr) * jaccard + lambda_rr * d_qg``.
"""
from __future__ import annotations

from typing import Union

import numpy as np

from app.errors import BadK, DimensionMismatch
from app.logger import logger
from app.retrieval.distance import DistanceMatrix

MatrixLike = Union[DistanceMatrix, np.ndarray]


def _values(d: MatrixLike) -> np.ndarray:
    return np.asarray(d.values if isinstance(d, DistanceMatrix) else d, dtype=np.float64)


def check_rerank_params(k1: int, k2: int, lambda_rr: float) -> None:
    """Raises BadK unless ``k1 > k2 >= 1`` and ``0 <= lambda_rr <= 1``."""
    if int(k1) != k1 or int(k2) != k2:
        raise BadK(f"k1 and k2 must be integers, got {k1}, {k2}")
    if not k1 > k2 >= 1:
        raise BadK(f"need k1 > k2 >= 1, got k1={k1}, k2={k2}")
    if not 0.0 <= lambda_rr <= 1.0:
        raise BadK(f"lambda_rr must lie in [0, 1], got {lambda_rr}")


def joint_distances(qg: np.ndarray, qq: np.ndarray, gg: np.ndarray) -> np.ndarray:
    nq, ng = qg.shape
    if qq.shape != (nq, nq) or gg.shape != (ng, ng):
        raise DimensionMismatch(
            f"blocks do not fit: qg {qg.shape}, qq {qq.shape}, gg {gg.shape}"
        )
    return np.block([[qq, qg], [qg.T, gg]])


def _row_scaled(full: np.ndarray) -> np.ndarray:
    peak = full.max(axis=1, keepdims=True)
    return np.divide(full, peak, out=np.zeros_like(full), where=peak > 0)


def k_reciprocal_neighbours(initial_rank: np.ndarray, i: int, k: int) -> np.ndarray:
    """Items among i's k+1 nearest that also hold i among their k+1 nearest."""
    forward = initial_rank[i, : k + 1]
    backward = initial_rank[forward, : k + 1]
    return forward[np.any(backward == i, axis=1)]


def _encode(dist: np.ndarray, initial_rank: np.ndarray, k1: int) -> np.ndarray:
    n = dist.shape[0]
    v = np.zeros_like(dist)
    half = int(np.around(k1 / 2))
    for i in range(n):
        reciprocal = k_reciprocal_neighbours(initial_rank, i, k1)
        expanded = reciprocal
        for candidate in reciprocal:
            candidate_set = k_reciprocal_neighbours(initial_rank, candidate, half)
            if len(np.intersect1d(candidate_set, reciprocal)) > 2.0 / 3.0 * len(candidate_set):
                expanded = np.append(expanded, candidate_set)
        expanded = np.unique(expanded)
        weight = np.exp(-dist[i, expanded])
        v[i, expanded] = weight / weight.sum()
    return v


def rerank_distances(
    qg: np.ndarray,
    qq: np.ndarray,
    gg: np.ndarray,
    k1: int = 20,
    k2: int = 6,
    lambda_rr: float = 0.3,
) -> np.ndarray:
    """Array form of :func:`k_reciprocal_rerank`."""
    check_rerank_params(k1, k2, lambda_rr)
    qg = np.asarray(qg, dtype=np.float64)
    full = _row_scaled(joint_distances(qg, np.asarray(qq, dtype=np.float64), np.asarray(gg, dtype=np.float64)))
    nq = qg.shape[0]
    initial_rank = np.argsort(full, axis=1, kind="stable")

    v = _encode(full, initial_rank, int(k1))
    if k2 > 1:
        v = np.stack([v[initial_rank[i, :k2]].mean(axis=0) for i in range(v.shape[0])])

    jaccard = np.empty_like(qg)
    gallery_v = v[nq:]
    for i in range(nq):
        overlap = np.minimum(v[i][None, :], gallery_v).sum(axis=1)
        jaccard[i] = 1.0 - overlap / (2.0 - overlap)
    np.clip(jaccard, 0.0, 1.0, out=jaccard)
    return (1.0 - lambda_rr) * jaccard + lambda_rr * qg


def k_reciprocal_rerank(
    d_qg: DistanceMatrix,
    d_qq: MatrixLike,
    d_gg: MatrixLike,
    k1: int = 20,
    k2: int = 6,
    lambda_rr: float = 0.3,
) -> DistanceMatrix:
    """Re-rank ``d_qg`` using the query-query and gallery-gallery blocks.

    With ``lambda_rr == 1`` the input distances come back unchanged.

    Raises:
        BadK: invalid ``k1`` / ``k2`` / ``lambda_rr``.
        DimensionMismatch: blocks of inconsistent size.
    """
    check_rerank_params(k1, k2, lambda_rr)
    if lambda_rr == 1.0:
        return d_qg
    logger.debug("re-ranking %dx%d with k1=%d k2=%d lambda=%s", *d_qg.shape, k1, k2, lambda_rr)
    return d_qg.replace(rerank_distances(d_qg.values, _values(d_qq), _values(d_gg), k1, k2, lambda_rr))
