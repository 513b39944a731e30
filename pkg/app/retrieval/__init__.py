"""Appearance distances, spatio-temporal fusion, ranking and re-ranking."""
from app.retrieval.distance import DistanceMatrix, appearance_distances
from app.retrieval.fusion import fuse, normalize_rows
from app.retrieval.pipeline import rank_pipeline, split_gallery
from app.retrieval.ranking import RankingResult, rank, read_ranking, write_ranking
from app.retrieval.rerank import k_reciprocal_rerank, rerank_distances

__all__ = [
    "DistanceMatrix",
    "RankingResult",
    "appearance_distances",
    "fuse",
    "k_reciprocal_rerank",
    "normalize_rows",
    "rank",
    "rank_pipeline",
    "read_ranking",
    "rerank_distances",
    "split_gallery",
    "write_ranking",
]
