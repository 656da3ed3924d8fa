"""Space-time Gaussian processes on spheres.

Thin Python layer over the C++ core. Angles are radians, coordinates are
degrees, and kernel parameters are passed as dicts keyed by parameter name
(sigma2, c_s, c_t, nu, alpha, beta, gamma, delta, lambda).
"""

from ._core import (
    FAMILIES,
    ExitCode,
    InferenceError,
    KernelParamError,
    NNGPError,
    NotPositiveDefinite,
    check_schoenberg,
    correlation_surface,
    covariance,
    crps_empirical,
    crps_gaussian,
    exact_logpdf,
    gram_eig_check,
    great_circle,
    nngp_logpdf,
    run_chain,
    run_command,
    simulate,
)

__all__ = [
    "FAMILIES",
    "ExitCode",
    "InferenceError",
    "KernelParamError",
    "NNGPError",
    "NotPositiveDefinite",
    "check_schoenberg",
    "correlation_surface",
    "covariance",
    "crps_empirical",
    "crps_gaussian",
    "exact_logpdf",
    "gram_eig_check",
    "great_circle",
    "nngp_logpdf",
    "run_chain",
    "run_command",
    "simulate",
]
