"""Camera-distance and time-interval samples from same-identity sighting pairs."""
from __future__ import annotations

from collections import defaultdict

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.data.models import CameraGraph, Dataset, Pairing
from app.errors import NoPositivePairs


class STSamples(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    delta: np.ndarray
    tau: np.ndarray

    def __len__(self) -> int:
        return int(self.delta.shape[0])


def _pairs(dataset: Dataset, pairing: Pairing) -> list[tuple[int, int]]:
    groups: dict[str, list[int]] = defaultdict(list)
    for index, vehicle in enumerate(dataset.vehicle_ids):
        groups[vehicle].append(index)
    timestamps = dataset.timestamps
    pairs: list[tuple[int, int]] = []
    for vehicle in sorted(groups):
        members = groups[vehicle]
        if pairing is Pairing.CONSECUTIVE:
            ordered = sorted(members, key=lambda i: (timestamps[i], dataset.records[i].image_id))
            pairs += list(zip(ordered, ordered[1:]))
        else:
            pairs += [(i, j) for k, i in enumerate(members) for j in members[k + 1 :]]
    return pairs


def collect_st_samples(
    dataset: Dataset,
    graph: CameraGraph,
    pairing: Pairing = Pairing.ALL,
) -> STSamples:
    """delta / tau for every same-identity cross-camera pair, each pair once.

    ``consecutive`` instead takes one pair per two sightings of an identity
    that are adjacent in time. Pairs with a zero distance or a zero interval are dropped.

    Raises:
        NoPositivePairs: if no pair survives.
        MissingCameraDistance: if a needed camera pair is absent from the graph.
    """
    pairing = Pairing(pairing)
    cameras = dataset.camera_ids
    timestamps = dataset.timestamps
    delta, tau = [], []
    for i, j in _pairs(dataset, pairing):
        if cameras[i] == cameras[j]:
            continue
        d = graph.distance(cameras[i], cameras[j])
        t = abs(timestamps[i] - timestamps[j])
        if d > 0 and t > 0:
            delta.append(d)
            tau.append(t)
    if not delta:
        raise NoPositivePairs()
    return STSamples(delta=np.array(delta), tau=np.array(tau))
