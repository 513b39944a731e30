"""Log-normal spatio-temporal model of camera transitions."""
from app.spatiotemporal.lognormal import LogNormalParams, fit_log_normal, log_likelihood, log_normal_pdf
from app.spatiotemporal.model import (
    STModel,
    fit_st_model,
    load_st_model,
    save_st_model,
    spatial_affinity,
    st_penalty,
    temporal_affinity,
)
from app.spatiotemporal.samples import STSamples, collect_st_samples

__all__ = [
    "LogNormalParams",
    "STModel",
    "STSamples",
    "collect_st_samples",
    "fit_log_normal",
    "fit_st_model",
    "load_st_model",
    "log_likelihood",
    "log_normal_pdf",
    "save_st_model",
    "spatial_affinity",
    "st_penalty",
    "temporal_affinity",
]
