"""Retrieval metrics and evaluation protocols."""
from app.evaluation.metrics import (
    EvalReport,
    average_precision,
    cmc,
    evaluate,
    read_report,
    relevance_mask,
    write_report,
)
from app.evaluation.splits import repeated_split_evaluate, sample_gallery_split

__all__ = [
    "EvalReport",
    "average_precision",
    "cmc",
    "evaluate",
    "read_report",
    "relevance_mask",
    "repeated_split_evaluate",
    "sample_gallery_split",
    "write_report",
]
