"""One function per subcommand; each returns the process exit code."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from app.config import EngineConfig
from app.data.io import (
    load_dataset,
    load_metadata,
    parse_camera_graph,
    read_queries,
)
from app.errors import UsageError
from app.evaluation.metrics import dump_report, evaluate, write_report
from app.logger import logger
from app.retrieval.pipeline import rank_pipeline
from app.retrieval.ranking import read_ranking, write_ranking
from app.spatiotemporal.lognormal import LogNormalParams
from app.spatiotemporal.model import fit_st_model, load_st_model, save_st_model
from app.synth.generator import SynthConfig, generate, write_synth
from app.training.trainer import train_toy, write_trace


def cmd_synth(args: argparse.Namespace, config: EngineConfig) -> int:
    cfg = SynthConfig(
        n_identities=args.identities,
        cameras=args.cameras,
        sightings_per_identity=args.per_id,
        embedding_dim=args.dim,
        cluster_spread=args.spread,
        true_dist_params=LogNormalParams(mu=args.dist_mu, sigma=args.dist_sigma),
        true_time_params=LogNormalParams(mu=args.time_mu, sigma=args.time_sigma),
        noise_fraction=args.noise,
        seed=config.seed,
        time_span=args.time_span,
    )
    write_synth(generate(cfg), args.out)
    return 0


def cmd_fit_st(args: argparse.Namespace, config: EngineConfig) -> int:
    dataset = load_metadata(args.meta)
    graph = parse_camera_graph(args.cameras)
    save_st_model(args.out, fit_st_model(dataset, graph, config))
    logger.info("wrote spatio-temporal model to %s", args.out)
    return 0


def cmd_rank(args: argparse.Namespace, config: EngineConfig) -> int:
    if (args.st is None) != (args.cameras is None):
        raise UsageError("--st and --cameras must be given together")
    dataset = load_dataset(args.features, args.meta)
    queries = read_queries(args.queries, dataset)
    graph = model = None
    if args.st is not None:
        graph = parse_camera_graph(args.cameras)
        model = load_st_model(args.st)
        if args.omega is not None:
            model = model.model_copy(update={"omega": args.omega})
    result = rank_pipeline(dataset, queries, graph, model, config)
    write_ranking(args.out, result)
    logger.info("wrote ranking for %d queries to %s", len(result.query_ids), args.out)
    return 0


def cmd_eval(args: argparse.Namespace, config: EngineConfig) -> int:
    ranking = read_ranking(args.ranks)
    dataset = load_metadata(args.meta)
    report = evaluate(ranking, dataset, config.protocol, config.max_rank)
    if args.out:
        write_report(args.out, report)
    else:
        sys.stdout.write(dump_report(report))
    return 0


def cmd_train_toy(args: argparse.Namespace, config: EngineConfig) -> int:
    data = Path(args.data)
    dataset = load_dataset(data / "features.bin", data / "meta.csv")
    result = train_toy(dataset, config, args.epochs, args.objective)
    if args.trace:
        write_trace(args.trace, result.trace)
    return 0
