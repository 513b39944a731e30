"""Fused distance D = D_a + omega (D_s + D_t)."""
from __future__ import annotations

import numpy as np

from app.data.models import CameraGraph, Dataset
from app.logger import logger
from app.retrieval.distance import DistanceMatrix
from app.spatiotemporal.model import STModel, st_penalty


def normalize_rows(d: DistanceMatrix) -> DistanceMatrix:
    """Min-max scale each row to [0, 1]; constant rows become 0."""
    values = d.values
    low = values.min(axis=1, keepdims=True)
    span = values.max(axis=1, keepdims=True) - low
    scaled = np.divide(values - low, span, out=np.zeros_like(values), where=span > 0)
    return d.replace(scaled)


def fuse(
    d_a: DistanceMatrix,
    dataset: Dataset,
    graph: CameraGraph,
    model: STModel,
    normalize: bool = False,
) -> DistanceMatrix:
    """Add the weighted spatio-temporal penalty to an appearance matrix.

    Query and gallery metadata are looked up in ``dataset`` by image id.
    Same-camera pairs keep their appearance distance. With ``omega == 0``
    the appearance matrix is returned unchanged.

    Raises:
        UnknownImageId: an id of ``d_a`` is not in ``dataset``.
        MissingCameraDistance: a cross-camera pair has no graph distance.
    """
    base = normalize_rows(d_a) if normalize else d_a
    if model.omega == 0:
        return base
    q = dataset.indices_of(base.query_ids)
    g = dataset.indices_of(base.gallery_ids)
    penalty = st_penalty(
        dataset.camera_ids[q],
        dataset.timestamps[q],
        dataset.camera_ids[g],
        dataset.timestamps[g],
        graph,
        model,
    )
    logger.debug("fused %dx%d matrix with omega=%s", *base.shape, model.omega)
    return base.replace(base.values + model.omega * penalty)
