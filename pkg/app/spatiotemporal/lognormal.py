"""Log-normal density, closed-form maximum-likelihood fit and log-likelihood."""
from __future__ import annotations

from collections.abc import Sequence
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import lognorm

from app.errors import DegenerateSample, NonPositiveInput, NonPositiveSample

ArrayLike = Union[float, Sequence[float], np.ndarray]


class LogNormalParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: float = Field(..., allow_inf_nan=False)
    sigma: float = Field(..., gt=0, allow_inf_nan=False)

    @property
    def mode(self) -> float:
        return float(np.exp(self.mu - self.sigma**2))


def log_normal_pdf(x: ArrayLike, p: LogNormalParams) -> Union[float, np.ndarray]:
    """Density of ln N(mu, sigma) at ``x``; scalar in, scalar out.

    Raises:
        NonPositiveInput: if any ``x`` is not strictly positive.
    """
    values = np.asarray(x, dtype=np.float64)
    if np.any(~(values > 0)):
        raise NonPositiveInput(f"log-normal density needs x > 0, got {values[~(values > 0)].ravel()[:3]}")
    density = lognorm.pdf(values, s=p.sigma, scale=np.exp(p.mu))
    return float(density) if density.ndim == 0 else density


def peak_density(p: LogNormalParams) -> float:
    """Density at the mode exp(mu - sigma^2)."""
    return float(lognorm.pdf(p.mode, s=p.sigma, scale=np.exp(p.mu)))


def _checked_logs(samples: ArrayLike) -> np.ndarray:
    values = np.asarray(samples, dtype=np.float64).ravel()
    if values.size < 2:
        raise DegenerateSample(f"need at least 2 samples, got {values.size}")
    if np.any(~(values > 0)) or not np.all(np.isfinite(values)):
        raise NonPositiveSample("log-normal samples must be finite and strictly positive")
    return np.log(values)


def fit_log_normal(samples: ArrayLike) -> LogNormalParams:
    """Maximum-likelihood (mu, sigma): mean and population std of ln x.

    Raises:
        DegenerateSample: fewer than two samples, or all samples equal.
        NonPositiveSample: a sample is zero, negative or not finite.
    """
    logs = _checked_logs(samples)
    if np.ptp(logs) == 0:
        raise DegenerateSample("all samples are equal")
    mu = float(logs.mean())
    sigma = float(np.sqrt(np.mean((logs - mu) ** 2)))
    return LogNormalParams(mu=mu, sigma=sigma)


def log_likelihood(samples: ArrayLike, p: LogNormalParams) -> float:
    """sum_i log[(1 / x_i) N(ln x_i; mu, sigma)]."""
    values = np.asarray(samples, dtype=np.float64).ravel()
    if np.any(~(values > 0)):
        raise NonPositiveSample("log-normal samples must be strictly positive")
    return float(lognorm.logpdf(values, s=p.sigma, scale=np.exp(p.mu)).sum())
