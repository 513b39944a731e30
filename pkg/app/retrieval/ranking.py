"""Per-query gallery rankings and their CSV form."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.data.io import read_text
from app.errors import MalformedHeader, MalformedRow, RankingMismatch
from app.retrieval.distance import DistanceMatrix

RANKING_HEADER = "query_id,rank,gallery_id,distance"


class RankingResult(BaseModel):
    """``order[i]`` lists gallery indices for query i, nearest first."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    query_ids: tuple[str, ...]
    gallery_ids: tuple[str, ...]
    order: np.ndarray
    distances: np.ndarray

    @model_validator(mode="after")
    def check_rows(self) -> "RankingResult":
        shape = (len(self.query_ids), len(self.gallery_ids))
        if self.order.shape != shape or self.distances.shape != shape:
            raise RankingMismatch(None, f"order / distances must have shape {shape}")
        expected = np.arange(shape[1])
        for i, row in enumerate(self.order):
            if not np.array_equal(np.sort(row), expected):
                raise RankingMismatch(self.query_ids[i], "row is not a permutation of the gallery")
        if shape[1] > 1 and np.any(np.diff(self.distances, axis=1) < 0):
            raise RankingMismatch(None, "distances must be nondecreasing along each row")
        return self

    def ranked_gallery(self, i: int) -> list[str]:
        return [self.gallery_ids[j] for j in self.order[i]]


def rank(d: DistanceMatrix) -> RankingResult:
    """Stable ascending sort per row; ties keep gallery order."""
    order = np.argsort(d.values, axis=1, kind="stable")
    distances = np.take_along_axis(d.values, order, axis=1)
    return RankingResult(
        query_ids=d.query_ids,
        gallery_ids=d.gallery_ids,
        order=order,
        distances=distances,
    )


def write_ranking(path: Union[str, Path], result: RankingResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(RANKING_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for i, query_id in enumerate(result.query_ids):
            for position, (j, value) in enumerate(zip(result.order[i], result.distances[i]), start=1):
                writer.writerow([query_id, position, result.gallery_ids[j], repr(float(value))])


def read_ranking(path: Union[str, Path]) -> RankingResult:
    """Parse a ranking CSV back into a :class:`RankingResult`.

    Gallery indices follow the first query's list. Every query must rank
    the same gallery set with ranks 1..n in order.

    Raises:
        MalformedHeader / MalformedRow: on format errors.
        RankingMismatch: rows that do not form full, consistent rankings.
    """
    rows: dict[str, list[tuple[int, str, float]]] = {}
    lines = read_text(path).splitlines()
    header = lines[0] if lines else ""
    if header.strip() != RANKING_HEADER:
        raise MalformedHeader(RANKING_HEADER, header)
    for line, fields in enumerate(csv.reader(lines[1:]), start=2):
        if not fields or not "".join(fields).strip():
            continue
        if len(fields) != 4:
            raise MalformedRow(line, f"expected 4 fields, found {len(fields)}")
        query_id, raw_rank, gallery_id, raw_distance = (f.strip() for f in fields)
        try:
            position = int(raw_rank)
            value = float(raw_distance)
        except ValueError:
            raise MalformedRow(line, f"bad rank or distance in {fields!r}") from None
        if not math.isfinite(value):
            raise MalformedRow(line, f"non-finite distance {raw_distance!r}")
        rows.setdefault(query_id, []).append((position, gallery_id, value))
    if not rows:
        raise RankingMismatch(None, "ranking file holds no rows")

    gallery_ids: tuple[str, ...] = ()
    lookup: dict[str, int] = {}
    order, distances = [], []
    for query_id, entries in rows.items():
        if [p for p, _, _ in entries] != list(range(1, len(entries) + 1)):
            raise RankingMismatch(query_id, "ranks must run 1..n in order")
        ids = [g for _, g, _ in entries]
        if not gallery_ids:
            gallery_ids = tuple(ids)
            lookup = {g: j for j, g in enumerate(gallery_ids)}
            if len(lookup) != len(gallery_ids):
                raise RankingMismatch(query_id, "gallery id listed twice")
        if len(ids) != len(gallery_ids) or set(ids) != set(gallery_ids):
            raise RankingMismatch(query_id, "ranks a different gallery set")
        order.append([lookup[g] for g in ids])
        distances.append([v for _, _, v in entries])
    return RankingResult(
        query_ids=tuple(rows),
        gallery_ids=gallery_ids,
        order=np.array(order, dtype=np.int64),
        distances=np.array(distances, dtype=np.float64),
    )
