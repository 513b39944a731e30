"""Channel and spatial attention over dense (C, H, W) feature maps.

Forward path only: weights are supplied or seeded, never trained here. The
rectifier inside the channel MLP is ``max(0, .)``.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt, field_validator, model_validator
from scipy.signal import correlate2d
from scipy.special import expit

from app.data.io import parse_features, read_text, write_features
from app.data.models import AttentionOrder
from app.errors import NonFiniteValue, ShapeMismatch


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


class FeatureMap(BaseModel):
    """A finite 3-D array indexed (channel, height, width)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v) -> np.ndarray:
        array = np.asarray(v, dtype=np.float64)
        if array.ndim != 3 or min(array.shape) < 1:
            raise ShapeMismatch(f"feature map must be (C, H, W) with every dim >= 1, got {array.shape}")
        bad = np.argwhere(~np.isfinite(array))
        if bad.size:
            raise NonFiniteValue(int(bad[0, 0]), int(bad[0, 1]))
        return _readonly(array)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(s) for s in self.data.shape)  # type: ignore[return-value]


MapLike = Union[FeatureMap, np.ndarray]


def as_feature_map(x: MapLike) -> FeatureMap:
    return x if isinstance(x, FeatureMap) else FeatureMap(data=x)


class ChannelAttentionWeights(BaseModel):
    """Bias-free two-layer MLP: ``w1`` is (hidden x C), ``w2`` is (C x hidden)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    w1: np.ndarray
    w2: np.ndarray
    reduction: PositiveInt = 16

    @field_validator("w1", "w2", mode="before")
    @classmethod
    def as_matrix(cls, v) -> np.ndarray:
        array = np.asarray(v, dtype=np.float64)
        if array.ndim != 2:
            raise ShapeMismatch(f"attention weights must be matrices, got shape {array.shape}")
        return _readonly(array)

    @model_validator(mode="after")
    def check_shapes(self) -> "ChannelAttentionWeights":
        if self.w1.shape != self.w2.shape[::-1]:
            raise ShapeMismatch(f"w1 {self.w1.shape} and w2 {self.w2.shape} are not transposed shapes")
        return self

    @property
    def channels(self) -> int:
        return int(self.w1.shape[1])

    @staticmethod
    def hidden_width(channels: int, reduction: int) -> int:
        return max(1, math.ceil(channels / reduction))

    @classmethod
    def zeros(cls, channels: int, reduction: int = 16) -> "ChannelAttentionWeights":
        hidden = cls.hidden_width(channels, reduction)
        return cls(w1=np.zeros((hidden, channels)), w2=np.zeros((channels, hidden)), reduction=reduction)

    @classmethod
    def seeded(cls, channels: int, reduction: int = 16, seed: int = 0, scale: float = 1.0) -> "ChannelAttentionWeights":
        """He-style random weights drawn from ``numpy.random.default_rng(seed)``."""
        rng = np.random.default_rng(seed)
        hidden = cls.hidden_width(channels, reduction)
        w1 = rng.normal(0.0, scale * math.sqrt(2.0 / channels), size=(hidden, channels))
        w2 = rng.normal(0.0, scale * math.sqrt(2.0 / hidden), size=(channels, hidden))
        return cls(w1=w1, w2=w2, reduction=reduction)


class SpatialAttentionWeights(BaseModel):
    """Convolution kernel of shape (1, 2, s, s) with odd ``s``."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kernel: np.ndarray

    @field_validator("kernel", mode="before")
    @classmethod
    def check_kernel(cls, v) -> np.ndarray:
        array = np.asarray(v, dtype=np.float64)
        if array.ndim != 4 or array.shape[:2] != (1, 2) or array.shape[2] != array.shape[3]:
            raise ShapeMismatch(f"spatial kernel must be (1, 2, s, s), got {array.shape}")
        if array.shape[2] % 2 == 0:
            raise ShapeMismatch(f"spatial kernel size must be odd, got {array.shape[2]}")
        return _readonly(array)

    @property
    def size(self) -> int:
        return int(self.kernel.shape[2])

    @classmethod
    def zeros(cls, size: int = 7) -> "SpatialAttentionWeights":
        return cls(kernel=np.zeros((1, 2, size, size)))

    @classmethod
    def seeded(cls, size: int = 7, seed: int = 0, scale: float = 1.0) -> "SpatialAttentionWeights":
        rng = np.random.default_rng(seed)
        fan_in = 2 * size * size
        return cls(kernel=rng.normal(0.0, scale * math.sqrt(2.0 / fan_in), size=(1, 2, size, size)))


# --- channel attention ---
def channel_pool(x: MapLike) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel spatial average and maximum."""
    data = as_feature_map(x).data
    return data.mean(axis=(1, 2)), data.max(axis=(1, 2))


def global_average_pool(x: MapLike) -> np.ndarray:
    return as_feature_map(x).data.mean(axis=(1, 2))


def channel_attention(x: MapLike, w: ChannelAttentionWeights) -> np.ndarray:
    """g_c = sigmoid(W2 relu(W1 avg) + W2 relu(W1 max)), one gate per channel."""
    x = as_feature_map(x)
    channels = x.dims[0]
    if w.channels != channels:
        raise ShapeMismatch(f"channel weights expect C={w.channels}, map has C={channels}")
    avg, mx = channel_pool(x)
    hidden = np.maximum(w.w1 @ avg, 0.0), np.maximum(w.w1 @ mx, 0.0)
    return expit(w.w2 @ hidden[0] + w.w2 @ hidden[1])


def apply_channel_gate(x: MapLike, g_c: np.ndarray) -> FeatureMap:
    data = as_feature_map(x).data
    gate = np.asarray(g_c, dtype=np.float64)
    if gate.shape != (data.shape[0],):
        raise ShapeMismatch(f"channel gate of shape {gate.shape} for C={data.shape[0]}")
    return FeatureMap(data=data * gate[:, None, None])


# --- spatial attention ---
def spatial_pool(x: MapLike) -> np.ndarray:
    """(2, H, W): channel-wise maximum plane, then channel-wise mean plane."""
    data = as_feature_map(x).data
    return np.stack([data.max(axis=0), data.mean(axis=0)])


def spatial_attention(x1: MapLike, w: SpatialAttentionWeights) -> np.ndarray:
    """g_s = sigmoid(conv([max; avg])) with zero padding (s - 1) / 2; shape (1, H, W)."""
    pooled = spatial_pool(x1)
    response = sum(
        correlate2d(pooled[c], w.kernel[0, c], mode="same", boundary="fill", fillvalue=0.0) for c in range(2)
    )
    return expit(response)[None, :, :]


def apply_spatial_gate(x1: MapLike, g_s: np.ndarray) -> FeatureMap:
    data = as_feature_map(x1).data
    gate = np.asarray(g_s, dtype=np.float64)
    if gate.ndim == 2:
        gate = gate[None, :, :]
    if gate.shape != (1,) + data.shape[1:]:
        raise ShapeMismatch(f"spatial gate of shape {gate.shape} for map {data.shape}")
    return FeatureMap(data=data * gate)


def attention_block(
    x: MapLike,
    cw: ChannelAttentionWeights,
    sw: SpatialAttentionWeights,
    order: AttentionOrder = AttentionOrder.CHANNEL_THEN_SPATIAL,
) -> FeatureMap:
    """Compose both attentions in the requested placement.

    ``parallel`` computes both gates from ``x`` and multiplies them in.
    """
    x = as_feature_map(x)
    order = AttentionOrder(order)
    if order is AttentionOrder.CHANNEL_THEN_SPATIAL:
        x1 = apply_channel_gate(x, channel_attention(x, cw))
        return apply_spatial_gate(x1, spatial_attention(x1, sw))
    if order is AttentionOrder.SPATIAL_THEN_CHANNEL:
        x1 = apply_spatial_gate(x, spatial_attention(x, sw))
        return apply_channel_gate(x1, channel_attention(x1, cw))
    g_c = channel_attention(x, cw)
    g_s = spatial_attention(x, sw)
    return FeatureMap(data=x.data * g_c[:, None, None] * g_s)


# --- weight files ---
def _shape_token(shape: tuple[int, ...]) -> str:
    return "x".join(str(s) for s in shape)


def save_attention_weights(path: Union[str, Path], cw: ChannelAttentionWeights, sw: SpatialAttentionWeights) -> None:
    """Write the weights as one features-container row plus a ``.shapes`` sidecar."""
    flat = np.concatenate([cw.w1.ravel(), cw.w2.ravel(), sw.kernel.ravel()])
    write_features(path, flat[None, :])
    sidecar = Path(f"{path}.shapes")
    sidecar.write_text(
        f"w1={_shape_token(cw.w1.shape)} w2={_shape_token(cw.w2.shape)} "
        f"kernel={_shape_token(sw.kernel.shape)} reduction={cw.reduction}\n",
        encoding="utf-8",
    )


def load_attention_weights(
    path: Union[str, Path],
) -> tuple[ChannelAttentionWeights, SpatialAttentionWeights]:
    tokens = dict(item.split("=", 1) for item in read_text(f"{path}.shapes").split())
    try:
        shapes = {k: tuple(int(s) for s in tokens[k].split("x")) for k in ("w1", "w2", "kernel")}
        reduction: Optional[int] = int(tokens.get("reduction", 16))
    except (KeyError, ValueError) as exc:
        raise ShapeMismatch(f"bad shapes sidecar for {path}: {exc}") from None
    flat = parse_features(path).ravel()
    sizes = [int(np.prod(shapes[k])) for k in ("w1", "w2", "kernel")]
    if flat.size != sum(sizes):
        raise ShapeMismatch(f"{path} holds {flat.size} values, sidecar declares {sum(sizes)}")
    w1, w2, kernel = np.split(flat, np.cumsum(sizes)[:-1])
    cw = ChannelAttentionWeights(w1=w1.reshape(shapes["w1"]), w2=w2.reshape(shapes["w2"]), reduction=reduction)
    sw = SpatialAttentionWeights(kernel=kernel.reshape(shapes["kernel"]))
    return cw, sw
