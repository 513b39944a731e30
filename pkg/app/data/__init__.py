"""Domain types and file codecs."""
from app.data.io import (
    load_dataset,
    load_metadata,
    parse_camera_graph,
    parse_features,
    parse_metadata,
    read_queries,
    write_camera_graph,
    write_features,
    write_metadata,
    write_queries,
)
from app.data.models import (
    AttentionOrder,
    Axis,
    CameraGraph,
    Dataset,
    DensityNorm,
    FeatureRecord,
    Pairing,
    Protocol,
)

__all__ = [
    "AttentionOrder",
    "Axis",
    "CameraGraph",
    "Dataset",
    "DensityNorm",
    "FeatureRecord",
    "Pairing",
    "Protocol",
    "load_dataset",
    "load_metadata",
    "parse_camera_graph",
    "parse_features",
    "parse_metadata",
    "read_queries",
    "write_camera_graph",
    "write_features",
    "write_metadata",
    "write_queries",
]
