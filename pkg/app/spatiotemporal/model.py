"""Spatio-temporal model: fitted log-normals, sigmoid affinities and persistence."""
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from app.data.io import parse_key_values, read_text
from app.data.models import CameraGraph, Dataset, DensityNorm, Pairing
from app.errors import ConfigError
from app.logger import logger
from app.spatiotemporal.lognormal import (
    LogNormalParams,
    fit_log_normal,
    log_normal_pdf,
    peak_density,
)
from app.spatiotemporal.samples import collect_st_samples

if TYPE_CHECKING:
    from app.config import EngineConfig

ArrayLike = Union[float, Sequence[float], np.ndarray]


class STModel(BaseModel):
    """Log-normal distance / interval models plus the sigmoid shapes and fusion weight."""

    model_config = ConfigDict(frozen=True)

    dist_params: LogNormalParams
    time_params: LogNormalParams
    alpha1: float = Field(6.0, gt=0)
    alpha2: float = 0.5
    beta1: float = Field(6.0, gt=0)
    beta2: float = 0.5
    omega: float = Field(0.2, ge=0)
    density_norm: DensityNorm = DensityNorm.RAW

    def _density(self, x: ArrayLike, params: LogNormalParams) -> Union[float, np.ndarray]:
        density = log_normal_pdf(x, params)
        if self.density_norm is DensityNorm.PEAK:
            density = density / peak_density(params)
        return density


def spatial_affinity(delta: ArrayLike, m: STModel) -> Union[float, np.ndarray]:
    """D_s = 1 / (1 + exp(alpha1 (p(delta) - alpha2))), small when plausible.

    Raises:
        NonPositiveInput: if ``delta`` is not strictly positive.
    """
    density = m._density(delta, m.dist_params)
    out = expit(-m.alpha1 * (density - m.alpha2))
    return float(out) if np.ndim(out) == 0 else out


def temporal_affinity(tau: ArrayLike, m: STModel) -> Union[float, np.ndarray]:
    """D_t = 1 / (1 + exp(beta1 (p(tau) - beta2)))."""
    density = m._density(tau, m.time_params)
    out = expit(-m.beta1 * (density - m.beta2))
    return float(out) if np.ndim(out) == 0 else out


def _temporal_affinity_with_limit(tau: np.ndarray, m: STModel) -> np.ndarray:
    """D_t over intervals that may be 0; density -> 0 as tau -> 0+."""
    out = np.full(tau.shape, float(expit(m.beta1 * m.beta2)))
    positive = tau > 0
    if positive.any():
        out[positive] = temporal_affinity(tau[positive], m)
    return out


def st_penalty(
    query_cameras: Sequence[str],
    query_times: np.ndarray,
    gallery_cameras: Sequence[str],
    gallery_times: np.ndarray,
    graph: CameraGraph,
    m: STModel,
) -> np.ndarray:
    """(n_query x n_gallery) matrix of D_s + D_t; same-camera pairs contribute 0.

    Raises:
        MissingCameraDistance: if a cross-camera pair has no graph distance.
    """
    q_cams = list(query_cameras)
    g_cams = list(gallery_cameras)
    penalty = np.zeros((len(q_cams), len(g_cams)))
    tau = np.abs(np.asarray(query_times, dtype=np.float64)[:, None] - np.asarray(gallery_times, dtype=np.float64)[None, :])
    cache: dict[tuple[str, str], float] = {}
    for i, qc in enumerate(q_cams):
        cross = np.array([gc != qc for gc in g_cams], dtype=bool)
        if not cross.any():
            continue
        delta = np.empty(int(cross.sum()))
        for slot, j in enumerate(np.flatnonzero(cross)):
            key = (qc, g_cams[j])
            if key not in cache:
                cache[key] = graph.distance(*key)
            delta[slot] = cache[key]
        penalty[i, cross] = spatial_affinity(delta, m) + _temporal_affinity_with_limit(tau[i, cross], m)
    return penalty


def fit_st_model(
    dataset: Dataset,
    graph: CameraGraph,
    config: "EngineConfig",
    pairing: Optional[Pairing] = None,
) -> STModel:
    """Fit both log-normals from same-identity pairs; shapes come from ``config``."""
    samples = collect_st_samples(dataset, graph, pairing or config.pairing)
    model = STModel(
        dist_params=fit_log_normal(samples.delta),
        time_params=fit_log_normal(samples.tau),
        alpha1=config.alpha1,
        alpha2=config.alpha2,
        beta1=config.beta1,
        beta2=config.beta2,
        omega=config.omega,
        density_norm=config.density_norm,
    )
    logger.info(
        "fitted %d pairs: delta ~ lnN(%.4f, %.4f), tau ~ lnN(%.4f, %.4f)",
        len(samples),
        model.dist_params.mu,
        model.dist_params.sigma,
        model.time_params.mu,
        model.time_params.sigma,
    )
    return model


# --- persistence ---
_FLOAT_KEYS = ("mu_delta", "sigma_delta", "mu_tau", "sigma_tau", "alpha1", "alpha2", "beta1", "beta2", "omega")


def _fmt(value: float) -> str:
    return format(value, ".17g")


def dump_st_model(m: STModel) -> str:
    values = {
        "mu_delta": m.dist_params.mu,
        "sigma_delta": m.dist_params.sigma,
        "mu_tau": m.time_params.mu,
        "sigma_tau": m.time_params.sigma,
        "alpha1": m.alpha1,
        "alpha2": m.alpha2,
        "beta1": m.beta1,
        "beta2": m.beta2,
        "omega": m.omega,
    }
    lines = [f"{key} = {_fmt(values[key])}" for key in _FLOAT_KEYS]
    lines.append(f"density_norm = {m.density_norm.value}")
    return "\n".join(lines) + "\n"


def _density_norm(raw: str) -> DensityNorm:
    try:
        return DensityNorm(raw)
    except ValueError:
        raise ConfigError(f"unknown density_norm {raw!r}") from None


def loads_st_model(text: str) -> STModel:
    values = parse_key_values(text)
    missing = [k for k in _FLOAT_KEYS if k not in values]
    if missing:
        raise ConfigError(f"model document lacks {', '.join(missing)}")
    unknown = set(values) - set(_FLOAT_KEYS) - {"density_norm"}
    if unknown:
        raise ConfigError(f"unknown model keys: {', '.join(sorted(unknown))}")
    try:
        f = {k: float(values[k]) for k in _FLOAT_KEYS}
    except ValueError as exc:
        raise ConfigError(f"bad model value: {exc}") from None
    return STModel(
        dist_params=LogNormalParams(mu=f["mu_delta"], sigma=f["sigma_delta"]),
        time_params=LogNormalParams(mu=f["mu_tau"], sigma=f["sigma_tau"]),
        alpha1=f["alpha1"],
        alpha2=f["alpha2"],
        beta1=f["beta1"],
        beta2=f["beta2"],
        omega=f["omega"],
        density_norm=_density_norm(values.get("density_norm", DensityNorm.RAW.value)),
    )


def save_st_model(path: Union[str, Path], m: STModel) -> None:
    Path(path).write_text(dump_st_model(m), encoding="utf-8")


def load_st_model(path: Union[str, Path]) -> STModel:
    return loads_st_model(read_text(path))
