"""Readers and writers for the engine's on-disk formats.

``meta.csv`` and ``cameras.csv`` are plain CSV with fixed headers;
``features.bin`` is ``DFR1`` | u32 n | u32 d | n*d little-endian float32.
"""
from __future__ import annotations

import csv
import math
import struct
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Union

import numpy as np

from app.data.models import CameraGraph, Dataset, FeatureRecord
from app.errors import (
    BadMagic,
    BadTimestamp,
    ConfigError,
    DimensionMismatch,
    DuplicateImageId,
    EmptyDataset,
    MalformedHeader,
    MalformedRow,
    NonFiniteValue,
    NonPositiveDistance,
    TruncatedPayload,
    UnknownImageId,
)
from app.logger import logger

PathLike = Union[str, Path]

METADATA_HEADER = "image_id,vehicle_id,camera_id,timestamp_s"
CAMERA_HEADER = "camera_a,camera_b,distance_m"
FEATURES_MAGIC = b"DFR1"
_FEATURES_HEADER = struct.Struct("<4sII")


def read_text(path: PathLike) -> str:
    """Read a UTF-8 text file.

    Raises:
        MalformedRow: the bytes are not valid UTF-8; ``line`` is where the bad byte sits.
    """
    data = Path(path).read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise MalformedRow(line, f"{path}: invalid UTF-8 at byte offset {exc.start}") from None


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment and later keys win.

    Raises:
        ConfigError: on a non-blank line without ``=``.
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def _read_lines(path: PathLike, header: str) -> list[tuple[int, list[str]]]:
    """Return ``(line_number, fields)`` for every non-blank data line."""
    lines = read_text(path).splitlines()
    found = lines[0].strip() if lines else ""
    if found != header:
        raise MalformedHeader(header, found)
    reader = csv.reader(lines[1:])
    rows = []
    for offset, fields in enumerate(reader, start=2):
        if not fields or all(not f.strip() for f in fields):
            continue
        rows.append((offset, [f.strip() for f in fields]))
    return rows


# --- metadata ---
def parse_metadata(path: PathLike) -> list[FeatureRecord]:
    """Parse ``meta.csv`` into records without embeddings, in file order.

    Raises:
        MalformedHeader: first line is not the exact metadata header.
        BadTimestamp: a timestamp is not a finite non-negative decimal.
        DuplicateImageId: an image id appears twice.
        EmptyDataset: the file holds only the header.
    """
    records: list[FeatureRecord] = []
    seen: set[str] = set()
    for line, fields in _read_lines(path, METADATA_HEADER):
        if len(fields) != 4:
            raise MalformedRow(line, f"expected 4 fields, found {len(fields)}")
        image_id, vehicle_id, camera_id, raw_ts = fields
        if not image_id or not vehicle_id or not camera_id:
            raise MalformedRow(line, "empty identifier")
        try:
            timestamp = float(raw_ts)
        except ValueError:
            raise BadTimestamp(line, raw_ts) from None
        if not math.isfinite(timestamp) or timestamp < 0:
            raise BadTimestamp(line, raw_ts)
        if image_id in seen:
            raise DuplicateImageId(image_id)
        seen.add(image_id)
        records.append(
            FeatureRecord(image_id=image_id, vehicle_id=vehicle_id, camera_id=camera_id, timestamp=timestamp)
        )
    if not records:
        raise EmptyDataset(f"{path} holds no metadata rows")
    logger.debug("parsed %d metadata rows from %s", len(records), path)
    return records


def write_metadata(path: PathLike, records: Iterable[FeatureRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(METADATA_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for r in records:
            writer.writerow([r.image_id, r.vehicle_id, r.camera_id, repr(float(r.timestamp))])


# --- features ---
def parse_features(path: PathLike) -> np.ndarray:
    """Parse ``features.bin`` into an ``(n, d)`` float64 matrix.

    Raises:
        BadMagic: the file does not start with ``DFR1``.
        TruncatedPayload: fewer bytes than the header declares.
        MalformedRow: bytes left over after the declared records.
        NonFiniteValue: a NaN or infinity in the payload.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != FEATURES_MAGIC:
        raise BadMagic(data[:4])
    if len(data) < _FEATURES_HEADER.size:
        raise TruncatedPayload(_FEATURES_HEADER.size, len(data))
    _, n, d = _FEATURES_HEADER.unpack_from(data)
    expected = _FEATURES_HEADER.size + 4 * n * d
    if len(data) < expected:
        raise TruncatedPayload(expected, len(data))
    if len(data) > expected:
        raise MalformedRow(n + 1, f"{len(data) - expected} trailing bytes after {n} declared records")
    values = np.frombuffer(data, dtype="<f4", count=n * d, offset=_FEATURES_HEADER.size)
    matrix = values.astype(np.float64).reshape(n, d)
    bad = np.argwhere(~np.isfinite(matrix))
    if bad.size:
        raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))
    return matrix


def write_features(path: PathLike, matrix: np.ndarray) -> None:
    array = np.asarray(matrix)
    if array.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {array.shape}")
    n, d = array.shape
    with open(path, "wb") as fh:
        fh.write(_FEATURES_HEADER.pack(FEATURES_MAGIC, n, d))
        fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())


def load_dataset(features_path: PathLike, meta_path: PathLike) -> Dataset:
    """Join ``features.bin`` rows with ``meta.csv`` lines by position."""
    records = parse_metadata(meta_path)
    matrix = parse_features(features_path)
    if matrix.shape[0] != len(records):
        raise DimensionMismatch(
            f"{meta_path} lists {len(records)} images but {features_path} holds {matrix.shape[0]} rows"
        )
    logger.info("loaded %d records of dim %d", matrix.shape[0], matrix.shape[1])
    return Dataset.from_records(records, matrix)


def load_metadata(meta_path: PathLike) -> Dataset:
    """Metadata-only dataset; embeddings are a zero placeholder column."""
    records = parse_metadata(meta_path)
    return Dataset.from_records(records, np.zeros((len(records), 1)))


# --- camera graph ---
def parse_camera_graph(path: PathLike) -> CameraGraph:
    """Parse ``cameras.csv`` and apply the symmetric closure.

    Raises:
        AsymmetricConflict: both orders of a pair appear with different values.
        NonPositiveDistance: a distance is zero, negative or not finite.
    """
    edges = []
    for line, fields in _read_lines(path, CAMERA_HEADER):
        if len(fields) != 3:
            raise MalformedRow(line, f"expected 3 fields, found {len(fields)}")
        a, b, raw = fields
        try:
            value = float(raw)
        except ValueError:
            raise MalformedRow(line, f"bad distance {raw!r}") from None
        if not math.isfinite(value) or value <= 0:
            raise NonPositiveDistance(a, b, value)
        edges.append((a, b, value))
    return CameraGraph.from_edges(edges)


def write_camera_graph(path: PathLike, graph: CameraGraph) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(CAMERA_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for a, b, value in graph.edges():
            writer.writerow([a, b, repr(value)])


# --- query lists ---
def read_queries(path: PathLike, dataset: Dataset | None = None) -> list[str]:
    """Read one image id per line; ids are checked against ``dataset`` if given."""
    ids = [line.strip() for line in read_text(path).splitlines() if line.strip()]
    if dataset is not None:
        for image_id in ids:
            dataset.index_of(image_id)
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise DuplicateImageId(dup)
    return ids


def write_queries(path: PathLike, image_ids: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image_id in image_ids:
            if not image_id:
                raise UnknownImageId(image_id)
            fh.write(image_id + "\n")
