"""Ablation sweeps: one evaluation per value of a single parameter."""
from __future__ import annotations

import argparse
import csv
from collections.abc import Callable
from pathlib import Path

from pydantic import ValidationError

from app.appearance.attention import ChannelAttentionWeights, SpatialAttentionWeights
from app.appearance.embedding import extract_embeddings
from app.cli.parser import attention_order_value, parts_value
from app.config import EngineConfig
from app.data.io import load_dataset, parse_camera_graph, read_queries
from app.data.models import CameraGraph, Dataset
from app.errors import UsageError
from app.evaluation.metrics import EvalReport, evaluate
from app.logger import logger
from app.retrieval.pipeline import rank_pipeline
from app.spatiotemporal.model import fit_st_model
from app.synth.generator import SynthConfig, generate_feature_maps
from app.training.trainer import train_toy

SWEEP_HEADER = ("value", "map", "top1", "top5")


class SweepData:
    """Dataset, queries and (lazily) the camera graph of a data directory."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.dataset = load_dataset(root / "features.bin", root / "meta.csv")
        self.queries = read_queries(root / "queries.txt", self.dataset)
        self._graph: CameraGraph | None = None

    @property
    def graph(self) -> CameraGraph:
        if self._graph is None:
            self._graph = parse_camera_graph(self.root / "cameras.csv")
        return self._graph


def _score(data: SweepData, dataset: Dataset, config: EngineConfig, with_st: bool) -> EvalReport:
    graph = model = None
    if with_st:
        graph = data.graph
        model = fit_st_model(dataset, graph, config)
    ranking = rank_pipeline(dataset, data.queries, graph, model, config)
    return evaluate(ranking, dataset, config.protocol, config.max_rank)


def _sweep_omega(data: SweepData, config: EngineConfig, raw: str, args: argparse.Namespace) -> EvalReport:
    return _score(data, data.dataset, config.with_overrides(omega=float(raw)), with_st=True)


def _sweep_rerank_lambda(data: SweepData, config: EngineConfig, raw: str, args: argparse.Namespace) -> EvalReport:
    tuned = config.with_overrides(rerank=True, lambda_rr=float(raw))
    return _score(data, data.dataset, tuned, with_st=True)


def _sweep_lambda(data: SweepData, config: EngineConfig, raw: str, args: argparse.Namespace) -> EvalReport:
    tuned = config.with_overrides(lambda_=float(raw))
    result = train_toy(data.dataset, tuned, args.epochs, args.objective)
    embedded = data.dataset.with_embeddings(result.embed(data.dataset.embeddings))
    return _score(data, embedded, tuned, with_st=False)


def _map_embeddings(data: SweepData, config: EngineConfig, spread: float, parts, order) -> Dataset:
    synth = SynthConfig(seed=config.seed, cluster_spread=spread)
    maps = generate_feature_maps(synth, data.dataset)
    cw = ChannelAttentionWeights.seeded(synth.map_channels, config.reduction_ratio, seed=config.seed)
    sw = SpatialAttentionWeights.seeded(config.kernel_size, seed=config.seed + 1)
    return data.dataset.with_embeddings(extract_embeddings(maps, cw, sw, parts=parts, order=order))


def _sweep_parts(data: SweepData, config: EngineConfig, raw: str, args: argparse.Namespace) -> EvalReport:
    embedded = _map_embeddings(data, config, args.spread, parts_value(raw), config.attention_order)
    return _score(data, embedded, config, with_st=False)


def _sweep_attention(data: SweepData, config: EngineConfig, raw: str, args: argparse.Namespace) -> EvalReport:
    parts = (config.parts_h, config.parts_w, config.parts_c)
    embedded = _map_embeddings(data, config, args.spread, parts, attention_order_value(raw))
    return _score(data, embedded, config, with_st=False)


SweepFn = Callable[[SweepData, EngineConfig, str, argparse.Namespace], EvalReport]

SWEEPS: dict[str, SweepFn] = {
    "omega": _sweep_omega,
    "rerank-lambda": _sweep_rerank_lambda,
    "lambda": _sweep_lambda,
    "parts": _sweep_parts,
    "attention-order": _sweep_attention,
}


def run_sweep(
    param: str,
    values: list[str],
    data_dir: Path,
    config: EngineConfig,
    args: argparse.Namespace,
) -> list[tuple[str, EvalReport]]:
    if param not in SWEEPS:
        raise UsageError(f"unknown sweep parameter {param!r}")
    if not values:
        raise UsageError("--values is empty")
    data = SweepData(data_dir)
    rows = []
    for raw in values:
        report = SWEEPS[param](data, config, raw, args)
        logger.info("%s=%s: mAP=%.4f top1=%.4f", param, raw, report.map, report.top1)
        rows.append((raw, report))
    return rows


def write_sweep(path: Path | str, rows: list[tuple[str, EvalReport]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for value, report in rows:
            writer.writerow([value, repr(report.map), repr(report.top1), repr(report.top5)])


def cmd_sweep(args: argparse.Namespace, config: EngineConfig) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    try:
        rows = run_sweep(args.param, values, Path(args.data), config, args)
    except ValidationError:
        raise
    except ValueError as exc:
        raise UsageError(f"bad sweep value: {exc}") from None
    write_sweep(args.out, rows)
    return 0
