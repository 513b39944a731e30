"""argparse front end; every flag defaults to ``None`` so the config decides."""
from __future__ import annotations

import argparse
import functools
from typing import NoReturn

from app.data.models import AttentionOrder, DensityNorm, Pairing, Protocol
from app.errors import UsageError

SWEEP_PARAMS = ("omega", "lambda", "parts", "attention-order", "rerank-lambda")


class EngineArgumentParser(argparse.ArgumentParser):
    """Raise :class:`UsageError` instead of exiting with status 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _rerank_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rerank", action="store_true", default=None, help="apply k-reciprocal re-ranking")
    p.add_argument("--rerank-first", action="store_true", default=None, help="re-rank appearance before fusing")
    p.add_argument("--k1", type=int, help="re-ranking neighbourhood (default 20)")
    p.add_argument("--k2", type=int, help="query-expansion neighbourhood (default 6)")
    p.add_argument("--lambda-rr", dest="lambda_rr", type=float, help="weight of the original distance (default 0.3)")
    p.add_argument("--normalize-rows", action="store_true", default=None, help="min-max scale appearance rows before fusion")


def _eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--protocol", choices=[x.value for x in Protocol], help="relevance rule (default cross-camera)")
    p.add_argument("--max-rank", dest="max_rank", type=int, help="CMC length (default 50)")


def _shape_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha1", type=float, help="spatial sigmoid slope (default 6)")
    p.add_argument("--alpha2", type=float, help="spatial sigmoid midpoint (default 0.5)")
    p.add_argument("--beta1", type=float, help="temporal sigmoid slope (default 6)")
    p.add_argument("--beta2", type=float, help="temporal sigmoid midpoint (default 0.5)")
    p.add_argument("--omega", type=float, help="fusion weight (default 0.2)")


def _trainer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=10, help="training epochs (default 10)")
    p.add_argument("--lambda", dest="lambda_", type=float, help="triplet weight (default 0.4)")
    p.add_argument("--margin", type=float, help="triplet margin (default 1.2)")
    p.add_argument("--eps", dest="epsilon", type=float, help="label smoothing (default 0.1)")
    p.add_argument("--lr", dest="learning_rate", type=float, help="learning rate (default 0.01)")
    p.add_argument("--dim-out", dest="embed_dim", type=int, help="embedding size (default: input size)")
    p.add_argument("--bnneck", action="store_true", default=None, help="standardize features before the head")
    p.add_argument("--batch-p", dest="batch_p", type=int, help="identities per batch (0 = full batch)")
    p.add_argument("--batch-k", dest="batch_k", type=int, help="images per identity in a batch")
    p.add_argument("--objective", choices=("all", "ce"), default="all", help="loss to optimise (default all)")


def _global_flags(p: argparse.ArgumentParser, default: object = None) -> None:
    p.add_argument("--config", default=default, help="key = value config file")
    p.add_argument("--log-level", dest="log_level", default=default, help="logging level (default INFO)")
    p.add_argument("--seed", type=int, default=default, help="random seed (default 0)")


def build_parser() -> EngineArgumentParser:
    parser = EngineArgumentParser(
        prog="reid",
        description="Vehicle re-identification retrieval engine.",
    )
    _global_flags(parser)
    # accepted after the subcommand too; SUPPRESS keeps a value given before it
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=EngineArgumentParser)
    add = functools.partial(sub.add_parser, parents=[common])

    p = add("synth", help="generate a synthetic camera-network dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--identities", type=int, default=50)
    p.add_argument("--cameras", type=int, default=6)
    p.add_argument("--per-id", dest="per_id", type=int, default=8, help="sightings per identity")
    p.add_argument("--dim", type=int, default=32, help="embedding dimension")
    p.add_argument("--spread", type=float, default=0.5, help="within-identity noise scale")
    p.add_argument("--noise", type=float, default=0.0, help="fraction of embeddings replaced by noise")
    p.add_argument("--time-span", dest="time_span", type=float, default=86400.0, help="first-sighting window (s)")
    p.add_argument("--dist-mu", dest="dist_mu", type=float, default=7.0, help="log-mean of camera distances")
    p.add_argument("--dist-sigma", dest="dist_sigma", type=float, default=0.5)
    p.add_argument("--time-mu", dest="time_mu", type=float, default=6.0, help="log-mean of transition times")
    p.add_argument("--time-sigma", dest="time_sigma", type=float, default=0.5)

    p = add("fit-st", help="fit the spatio-temporal model from metadata")
    p.add_argument("--meta", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pairing", choices=[x.value for x in Pairing])
    p.add_argument("--density-norm", dest="density_norm", choices=[x.value for x in DensityNorm])
    _shape_flags(p)

    p = add("rank", help="rank gallery images for each query")
    p.add_argument("--features", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--queries", required=True, help="one query image_id per line")
    p.add_argument("--cameras", help="camera graph (needed with --st)")
    p.add_argument("--st", help="spatio-temporal model document")
    p.add_argument("--omega", type=float, help="overrides the model's fusion weight")
    p.add_argument("--out", required=True)
    _rerank_flags(p)

    p = add("eval", help="score a ranking file")
    p.add_argument("--ranks", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", help="report file (default: stdout)")
    _eval_flags(p)

    p = add("train-toy", help="train a linear embedder on stored embeddings")
    p.add_argument("--data", required=True, help="directory with features.bin and meta.csv")
    p.add_argument("--trace", help="per-epoch loss CSV")
    _trainer_flags(p)

    p = add("sweep", help="evaluate one parameter over a list of values")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--data", required=True, help="synthetic dataset directory")
    p.add_argument("--out", required=True, help="CSV value,map,top1,top5")
    p.add_argument("--spread", type=float, default=0.5, help="feature-map noise for parts / attention-order")
    _eval_flags(p)
    _rerank_flags(p)
    _trainer_flags(p)
    return parser


def attention_order_value(raw: str) -> AttentionOrder | None:
    """``none`` disables attention."""
    text = raw.strip().replace("-", "_")
    if text == "none":
        return None
    try:
        return AttentionOrder(text)
    except ValueError:
        raise UsageError(f"unknown attention order {raw!r}") from None


def parts_value(raw: str) -> tuple[int, int, int]:
    """``n`` for (n, n, n) or ``HxWxC``."""
    fields = raw.strip().lower().split("x")
    try:
        counts = [int(f) for f in fields]
    except ValueError:
        raise UsageError(f"bad parts value {raw!r}") from None
    if len(counts) == 1:
        counts *= 3
    if len(counts) != 3 or any(c < 0 for c in counts):
        raise UsageError(f"parts must be n or HxWxC with counts >= 0, got {raw!r}")
    return counts[0], counts[1], counts[2]
