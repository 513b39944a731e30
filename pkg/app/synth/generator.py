"""Seeded synthetic camera network with planted identities and transitions."""
from __future__ import annotations

from itertools import combinations
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from app.data.io import write_camera_graph, write_features, write_metadata, write_queries
from app.data.models import CameraGraph, Dataset, DensityNorm, FeatureRecord
from app.logger import logger
from app.spatiotemporal.lognormal import LogNormalParams
from app.spatiotemporal.model import STModel, save_st_model
from app.spatiotemporal.samples import STSamples
from app.synth.corrupt import corrupt


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_identities: PositiveInt = 50
    cameras: PositiveInt = 6
    sightings_per_identity: PositiveInt = 8
    embedding_dim: PositiveInt = 32
    cluster_spread: float = Field(0.5, ge=0)
    true_dist_params: LogNormalParams = LogNormalParams(mu=7.0, sigma=0.5)
    true_time_params: LogNormalParams = LogNormalParams(mu=6.0, sigma=0.5)
    noise_fraction: float = Field(0.0, ge=0, le=1)
    seed: int = Field(0, ge=0)
    time_span: float = Field(86400.0, gt=0, description="Window for each identity's first sighting (s)")
    map_channels: PositiveInt = 16
    map_height: PositiveInt = 8
    map_width: PositiveInt = 4


class SynthResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dataset: Dataset
    graph: CameraGraph
    truth: STModel
    queries: tuple[str, ...]
    transitions: STSamples
    cross_camera_pairs: int


def camera_names(m: int) -> list[str]:
    width = len(str(m))
    return [f"c{i:0{width}d}" for i in range(1, m + 1)]


def _graph(cameras: list[str], params: LogNormalParams, rng: np.random.Generator) -> CameraGraph:
    edges = [(a, b, float(rng.lognormal(params.mu, params.sigma))) for a, b in combinations(cameras, 2)]
    return CameraGraph.from_edges(edges, cameras=cameras)


def generate(cfg: SynthConfig) -> SynthResult:
    """Build dataset, graph, planted model and query list from one seeded stream.

    Each identity starts on a random camera at a uniform time in
    ``[0, time_span)``. Every further sighting moves to a different camera
    after a log-normal interval, so consecutive sightings form the planted
    transitions. With a single camera no transition exists and all sightings
    stay on it.
    """
    rng = np.random.default_rng(cfg.seed)
    cameras = camera_names(cfg.cameras)
    graph = _graph(cameras, cfg.true_dist_params, rng)
    centroids = rng.normal(0.0, 1.0, size=(cfg.n_identities, cfg.embedding_dim))

    records: list[FeatureRecord] = []
    rows: list[np.ndarray] = []
    delta: list[float] = []
    tau: list[float] = []
    queries: list[str] = []
    id_width = len(str(cfg.n_identities))
    for v in range(cfg.n_identities):
        vehicle = f"v{v:0{id_width}d}"
        camera = int(rng.integers(cfg.cameras))
        timestamp = float(rng.uniform(0.0, cfg.time_span))
        for s in range(cfg.sightings_per_identity):
            if s and cfg.cameras > 1:
                step = int(rng.integers(1, cfg.cameras))
                nxt = (camera + step) % cfg.cameras
                interval = float(rng.lognormal(cfg.true_time_params.mu, cfg.true_time_params.sigma))
                delta.append(graph.distance(cameras[camera], cameras[nxt]))
                tau.append(interval)
                camera, timestamp = nxt, timestamp + interval
            elif s:
                timestamp += float(rng.lognormal(cfg.true_time_params.mu, cfg.true_time_params.sigma))
            records.append(
                FeatureRecord(
                    image_id=f"img{len(records):06d}",
                    vehicle_id=vehicle,
                    camera_id=cameras[camera],
                    timestamp=timestamp,
                )
            )
            rows.append(centroids[v] + rng.normal(0.0, 1.0, size=cfg.embedding_dim) * cfg.cluster_spread)
        first = len(records) - cfg.sightings_per_identity
        queries.append(records[first + int(rng.integers(cfg.sightings_per_identity))].image_id)

    # float32 precision so the in-memory dataset matches features.bin exactly
    embeddings = np.asarray(rows, dtype=np.float32).astype(np.float64)
    dataset = Dataset.from_records(records, embeddings)
    dataset = corrupt(dataset, cfg.noise_fraction, cfg.seed + 1)
    if cfg.noise_fraction:
        dataset = dataset.with_embeddings(dataset.embeddings.astype(np.float32).astype(np.float64))

    cams = dataset.camera_ids
    vehicles = dataset.vehicle_ids
    same = vehicles[:, None] == vehicles[None, :]
    cross = np.triu(same & (cams[:, None] != cams[None, :]), k=1)
    truth = STModel(
        dist_params=cfg.true_dist_params,
        time_params=cfg.true_time_params,
        density_norm=DensityNorm.PEAK,
    )
    logger.info(
        "generated %d records, %d identities, %d cameras, %d transitions",
        len(dataset),
        cfg.n_identities,
        cfg.cameras,
        len(delta),
    )
    return SynthResult(
        dataset=dataset,
        graph=graph,
        truth=truth,
        queries=tuple(queries),
        transitions=STSamples(delta=np.array(delta), tau=np.array(tau)),
        cross_camera_pairs=int(cross.sum()),
    )


def generate_feature_maps(cfg: SynthConfig, dataset: Dataset) -> np.ndarray:
    """(n, C, H, W) maps: one prototype per identity plus spherical noise."""
    rng = np.random.default_rng(cfg.seed + 3)
    shape = (cfg.map_channels, cfg.map_height, cfg.map_width)
    vehicles = sorted(set(dataset.vehicle_ids))
    prototypes = {v: rng.normal(0.0, 1.0, size=shape) for v in vehicles}
    noise = rng.normal(0.0, 1.0, size=(len(dataset), *shape)) * cfg.cluster_spread
    return np.stack([prototypes[v] for v in dataset.vehicle_ids]) + noise


def write_synth(result: SynthResult, out_dir: Union[str, Path]) -> Path:
    """Write features.bin, meta.csv, cameras.csv, truth.txt and queries.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_features(out / "features.bin", result.dataset.embeddings)
    write_metadata(out / "meta.csv", result.dataset.records)
    write_camera_graph(out / "cameras.csv", result.graph)
    save_st_model(out / "truth.txt", result.truth)
    write_queries(out / "queries.txt", result.queries)
    logger.info("wrote synthetic dataset to %s", out)
    return out
