"""mAP and CMC under the cross-camera (or plain) retrieval protocol."""
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.data.io import parse_key_values, read_text
from app.data.models import Dataset, FeatureRecord, Protocol
from app.errors import ConfigError, InvalidParameter, NoValidQueries
from app.logger import logger
from app.retrieval.ranking import RankingResult


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    map: float = Field(..., ge=0, le=1)
    cmc: tuple[float, ...]
    per_query_ap: tuple[Optional[float], ...] = ()
    num_valid_queries: int = Field(..., ge=0)

    @field_validator("cmc")
    @classmethod
    def check_cmc(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v:
            raise InvalidParameter("cmc must hold at least one rank")
        if any(x < 0 or x > 1 for x in v) or any(b < a for a, b in zip(v, v[1:])):
            raise InvalidParameter("cmc must be nondecreasing within [0, 1]")
        return v

    def top(self, r: int) -> float:
        """CMC at rank ``r`` (the last value once ``r`` runs past the curve)."""
        return self.cmc[min(r, len(self.cmc)) - 1]

    @property
    def top1(self) -> float:
        return self.top(1)

    @property
    def top5(self) -> float:
        return self.top(5)


def _masks(
    query_vehicle: str,
    query_camera: str,
    gallery_vehicles: np.ndarray,
    gallery_cameras: np.ndarray,
    protocol: Protocol,
) -> tuple[np.ndarray, np.ndarray]:
    same_id = gallery_vehicles == query_vehicle
    if Protocol(protocol) is Protocol.ALL:
        return same_id, np.zeros_like(same_id)
    same_cam = gallery_cameras == query_camera
    return same_id & ~same_cam, same_id & same_cam


def relevance_mask(
    query: FeatureRecord,
    gallery: Sequence[FeatureRecord],
    protocol: Union[Protocol, str] = Protocol.CROSS_CAMERA,
) -> tuple[np.ndarray, np.ndarray]:
    """(relevant, junk) flags over ``gallery``.

    Cross-camera: relevant means same vehicle on another camera, junk means
    same vehicle on the query's camera. ``all`` marks every same-vehicle
    item relevant and nothing junk.
    """
    vehicles = np.array([g.vehicle_id for g in gallery], dtype=object)
    cameras = np.array([g.camera_id for g in gallery], dtype=object)
    return _masks(query.vehicle_id, query.camera_id, vehicles, cameras, Protocol(protocol))


def average_precision(flags: Sequence[bool]) -> Optional[float]:
    """Non-interpolated AP of a ranked relevance list; ``None`` when nothing is relevant."""
    hits = np.asarray(flags, dtype=bool)
    positions = np.flatnonzero(hits) + 1
    if positions.size == 0:
        return None
    precision = np.arange(1, positions.size + 1) / positions
    return float(precision.mean())


def cmc(flag_rows: Sequence[Sequence[bool]], max_rank: int) -> np.ndarray:
    """Fraction of valid queries whose first hit lies within rank r, r = 1..max_rank.

    Raises:
        NoValidQueries: if no row holds a relevant item.
    """
    if max_rank < 1:
        raise InvalidParameter(f"max_rank must be >= 1, got {max_rank}")
    first_hits = []
    for row in flag_rows:
        hits = np.flatnonzero(np.asarray(row, dtype=bool))
        if hits.size:
            first_hits.append(hits[0])
    if not first_hits:
        raise NoValidQueries()
    counts = np.bincount(np.minimum(first_hits, max_rank), minlength=max_rank + 1)[:max_rank]
    return np.cumsum(counts) / len(first_hits)


def ranked_flags(
    ranking: RankingResult,
    dataset: Dataset,
    protocol: Union[Protocol, str] = Protocol.CROSS_CAMERA,
) -> list[np.ndarray]:
    """Per query, relevance flags in ranked order with junk items removed."""
    protocol = Protocol(protocol)
    q = dataset.indices_of(ranking.query_ids)
    g = dataset.indices_of(ranking.gallery_ids)
    vehicles, cameras = dataset.vehicle_ids, dataset.camera_ids
    rows = []
    for i, qi in enumerate(q):
        ranked = g[ranking.order[i]]
        relevant, junk = _masks(vehicles[qi], cameras[qi], vehicles[ranked], cameras[ranked], protocol)
        rows.append(relevant[~junk])
    return rows


def evaluate(
    ranking: RankingResult,
    dataset: Dataset,
    protocol: Union[Protocol, str] = Protocol.CROSS_CAMERA,
    max_rank: int = 50,
) -> EvalReport:
    """Score a ranking against the identities and cameras in ``dataset``.

    Raises:
        UnknownImageId: a ranked id is missing from ``dataset``.
        NoValidQueries: no query has a relevant gallery item.
    """
    rows = ranked_flags(ranking, dataset, protocol)
    per_query = [average_precision(row) for row in rows]
    valid = [ap for ap in per_query if ap is not None]
    if not valid:
        raise NoValidQueries()
    curve = cmc(rows, max_rank)
    report = EvalReport(
        map=min(1.0, sum(valid) / len(valid)),
        cmc=tuple(float(x) for x in curve),
        per_query_ap=tuple(per_query),
        num_valid_queries=len(valid),
    )
    logger.info(
        "evaluated %d/%d queries: mAP=%.4f top1=%.4f top5=%.4f",
        report.num_valid_queries,
        len(rows),
        report.map,
        report.top1,
        report.top5,
    )
    return report


def dump_report(report: EvalReport) -> str:
    lines = [
        f"map = {report.map!r}",
        f"top1 = {report.top1!r}",
        f"top5 = {report.top5!r}",
        "cmc = " + ",".join(repr(x) for x in report.cmc),
        f"num_valid_queries = {report.num_valid_queries}",
    ]
    return "\n".join(lines) + "\n"


def write_report(path: Union[str, Path], report: EvalReport) -> None:
    Path(path).write_text(dump_report(report), encoding="utf-8")


def read_report(path: Union[str, Path]) -> EvalReport:
    """Parse a report document; ``top1`` / ``top5`` are derived from ``cmc``."""
    values = parse_key_values(read_text(path))
    try:
        return EvalReport(
            map=float(values["map"]),
            cmc=tuple(float(x) for x in values["cmc"].split(",")),
            num_valid_queries=int(values["num_valid_queries"]),
        )
    except KeyError as exc:
        raise ConfigError(f"report lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"bad report value: {exc}") from None
