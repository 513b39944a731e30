"""Repeated random gallery splits (one gallery image per drawn identity)."""
from __future__ import annotations

from collections import defaultdict
from typing import Union

import numpy as np

from app.data.models import Dataset, Protocol
from app.errors import InvalidParameter
from app.evaluation.metrics import EvalReport, evaluate
from app.logger import logger
from app.retrieval.distance import appearance_distances
from app.retrieval.ranking import rank


def sample_gallery_split(
    dataset: Dataset,
    n_identities: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n_identities`` vehicles; one random image each forms the gallery.

    Returns ``(query_indices, gallery_indices)``; the remaining images of the
    drawn vehicles are the queries.
    """
    groups: dict[str, list[int]] = defaultdict(list)
    for index, vehicle in enumerate(dataset.vehicle_ids):
        groups[vehicle].append(index)
    vehicles = sorted(groups)
    if not 1 <= n_identities <= len(vehicles):
        raise InvalidParameter(f"cannot draw {n_identities} of {len(vehicles)} identities")
    queries, gallery = [], []
    for vehicle in rng.choice(vehicles, size=n_identities, replace=False):
        members = groups[vehicle]
        pick = int(rng.integers(len(members)))
        gallery.append(members[pick])
        queries.extend(m for k, m in enumerate(members) if k != pick)
    return np.array(sorted(queries), dtype=np.int64), np.array(sorted(gallery), dtype=np.int64)


def repeated_split_evaluate(
    dataset: Dataset,
    n_identities: int,
    repeats: int = 10,
    seed: int = 0,
    protocol: Union[Protocol, str] = Protocol.ALL,
    max_rank: int = 50,
) -> EvalReport:
    """Average appearance-only reports over ``repeats`` seeded splits."""
    if repeats < 1:
        raise InvalidParameter(f"repeats must be >= 1, got {repeats}")
    rng = np.random.default_rng(seed)
    ids = dataset.image_ids
    reports = []
    for _ in range(repeats):
        q, g = sample_gallery_split(dataset, n_identities, rng)
        d = appearance_distances(
            dataset.embeddings[q],
            dataset.embeddings[g],
            query_ids=[ids[i] for i in q],
            gallery_ids=[ids[j] for j in g],
        )
        reports.append(evaluate(rank(d), dataset, protocol, max_rank))
    curve = np.mean([r.cmc for r in reports], axis=0)
    averaged = EvalReport(
        map=min(1.0, float(np.mean([r.map for r in reports]))),
        cmc=tuple(float(x) for x in np.maximum.accumulate(np.minimum(curve, 1.0))),
        num_valid_queries=sum(r.num_valid_queries for r in reports),
    )
    logger.info("averaged %d splits of %d identities: mAP=%.4f", repeats, n_identities, averaged.map)
    return averaged
