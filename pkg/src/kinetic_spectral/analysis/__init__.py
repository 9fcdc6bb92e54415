"""Weighted norms, certifications and constant probes."""

from .certify import (
    CertificationReport,
    certify_eigen_identity,
    certify_energy_inequality,
    certify_monotone_decay,
    certify_rates,
    certify_table,
    certify_weight_chain,
    fit_c0,
    fit_cs,
    young_bound_check,
    young_sample_check,
)
from .probes import (
    energy_constant_probe,
    estimate_small_data_threshold,
    trilinear_constant_probe,
    trilinear_ratio,
)
from .weights import (
    LogExpWeight,
    SemigroupWeight,
    ShubinWeight,
    WeightSpec,
    log_weighted_norm,
    weighted_norm,
    weights,
)

__all__ = [
    "CertificationReport",
    "LogExpWeight",
    "SemigroupWeight",
    "ShubinWeight",
    "WeightSpec",
    "certify_eigen_identity",
    "certify_energy_inequality",
    "certify_monotone_decay",
    "certify_rates",
    "certify_table",
    "certify_weight_chain",
    "energy_constant_probe",
    "estimate_small_data_threshold",
    "fit_c0",
    "fit_cs",
    "log_weighted_norm",
    "trilinear_constant_probe",
    "trilinear_ratio",
    "weighted_norm",
    "weights",
    "young_bound_check",
    "young_sample_check",
]
