"""Synthetic camera-network datasets and feature-level contamination."""
from app.synth.corrupt import corrupt, corrupted_count
from app.synth.generator import (
    SynthConfig,
    SynthResult,
    generate,
    generate_feature_maps,
    write_synth,
)

__all__ = [
    "SynthConfig",
    "SynthResult",
    "corrupt",
    "corrupted_count",
    "generate",
    "generate_feature_maps",
    "write_synth",
]
