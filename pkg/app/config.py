"""Engine configuration loaded via `pydantic-settings`.

This module exposes a cached :func:`get_settings` helper for use across the
project. Values come from ``REID_``-prefixed environment variables, an
optional `.env` file, or a line-oriented ``key = value`` config file read by
:func:`load_config`.
"""
from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import Field, NonNegativeInt, PositiveInt, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.data.io import parse_key_values, read_text
from app.data.models import AttentionOrder, DensityNorm, Pairing, Protocol
from app.errors import ConfigError


class EngineConfig(BaseSettings):
    """Strongly typed engine configuration; defaults follow the published setup."""

    model_config = SettingsConfigDict(
        env_prefix="REID_",
        env_file=(".env",),
        env_file_encoding="utf-8",
        case_sensitive=False,
        frozen=True,
        populate_by_name=True,
        extra="ignore",
    )

    # --- objective ---
    lambda_: float = Field(0.4, ge=0, alias="lambda", description="Weight of the triplet term in the total loss")
    epsilon: float = Field(0.1, ge=0, le=1, description="Label-smoothing factor")
    margin: float = Field(1.2, ge=0, description="Triplet margin on squared distances")

    # --- spatio-temporal fusion ---
    omega: float = Field(0.2, ge=0, description="Weight of D_s + D_t in the fused distance")
    alpha1: float = Field(6.0, gt=0, description="Spatial sigmoid slope")
    alpha2: float = Field(0.5, description="Spatial sigmoid midpoint (density units)")
    beta1: float = Field(6.0, gt=0, description="Temporal sigmoid slope")
    beta2: float = Field(0.5, description="Temporal sigmoid midpoint (density units)")
    density_norm: DensityNorm = Field(
        DensityNorm.PEAK, description="Scale densities by their modal value before the sigmoid"
    )
    pairing: Pairing = Field(Pairing.ALL, description="Which same-identity pairs feed the log-normal fit")

    # --- appearance ---
    reduction_ratio: PositiveInt = Field(16, description="Channel-attention MLP reduction k")
    kernel_size: PositiveInt = Field(7, description="Spatial-attention kernel size (odd)")
    attention_order: AttentionOrder = Field(AttentionOrder.CHANNEL_THEN_SPATIAL)
    parts_h: PositiveInt = Field(2, description="Height division parts")
    parts_w: PositiveInt = Field(2, description="Width division parts")
    parts_c: PositiveInt = Field(2, description="Channel division parts")

    # --- retrieval ---
    rerank: bool = Field(False, description="Apply k-reciprocal re-ranking")
    rerank_first: bool = Field(False, description="Re-rank appearance distances before fusing")
    k1: PositiveInt = Field(20)
    k2: PositiveInt = Field(6)
    lambda_rr: float = Field(0.3, ge=0, le=1, description="Weight of the original distance after re-ranking")
    normalize_rows: bool = Field(False, description="Min-max normalize appearance rows before fusion")

    # --- evaluation ---
    protocol: Protocol = Field(Protocol.CROSS_CAMERA)
    max_rank: PositiveInt = Field(50)

    # --- toy trainer ---
    learning_rate: float = Field(0.01, gt=0)
    embed_dim: Optional[PositiveInt] = Field(None, description="Embedder output size; defaults to the input size")
    bnneck: bool = Field(False, description="Standardize features before the classification head")
    batch_p: NonNegativeInt = Field(0, description="Identities per mini-batch; 0 trains full-batch")
    batch_k: PositiveInt = Field(4, description="Images per identity in a mini-batch")

    seed: NonNegativeInt = Field(0)
    log_level: Literal["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"] = Field(
        "INFO", description="Log verbosity"
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def upper_log_level(cls, v):
        return v.upper() if isinstance(v, str) else v

    @field_validator("kernel_size")
    @classmethod
    def odd_kernel(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("kernel_size must be odd")
        return v

    @model_validator(mode="after")
    def check_rerank_window(self) -> "EngineConfig":
        if self.k1 <= self.k2:
            raise ValueError("k1 must exceed k2")
        return self

    @model_validator(mode="after")
    def check_pk_batch(self) -> "EngineConfig":
        # every anchor in a P x K batch needs a positive and a negative
        if self.batch_p > 0 and (self.batch_p < 2 or self.batch_k < 2):
            raise ValueError("mini-batches need batch_p >= 2 and batch_k >= 2 (batch_p = 0 trains full-batch)")
        return self

    def with_overrides(self, **updates: Any) -> "EngineConfig":
        """Return a validated copy with ``updates`` applied (``None`` values skipped)."""
        merged = self.model_dump(by_alias=False)
        merged.update({k: v for k, v in updates.items() if v is not None})
        return EngineConfig(**merged)


def _field_keys() -> dict[str, str]:
    keys = {}
    for name, info in EngineConfig.model_fields.items():
        keys[name] = name
        if info.alias:
            keys[info.alias] = name
    return keys


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Raises:
        ConfigError: on a line without ``=`` or an unknown key.
    """
    known = _field_keys()
    values: dict[str, str] = {}
    for key, value in parse_key_values(text).items():
        field = known.get(key.lower())
        if field is None:
            raise ConfigError(f"unknown key {key!r}")
        values[field] = value
    return values


def load_config(path: Union[str, Path]) -> EngineConfig:
    """Load a config file; unspecified fields fall back to env / defaults."""
    values = parse_config_text(read_text(path))
    return EngineConfig(**values)


def write_config(path: Union[str, Path], config: EngineConfig) -> None:
    lines = []
    for name, info in EngineConfig.model_fields.items():
        value = getattr(config, name)
        if value is None:
            continue
        if hasattr(value, "value"):
            value = value.value
        elif isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{info.alias or name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@lru_cache(maxsize=1)
def get_settings() -> EngineConfig:
    """Load and cache :class:`EngineConfig` from the environment.

    Raises:
        pydantic.ValidationError: if an environment value is invalid.
    """

    return EngineConfig()
