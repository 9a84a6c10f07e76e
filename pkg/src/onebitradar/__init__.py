"""One-bit MIMO radar target detection.

Rao's test on sign-quantized array data, exact and asymptotic performance
theory (weighted noncentral chi-square laws, characteristic-function
inversion, the pi/2 low-SNR loss), a full-precision GLRT baseline, and a
reproducible Monte Carlo harness with a CSV-producing CLI.
"""

from .detectors import (
    FullPrecisionGlrtDetector,
    KnownReflectivityLrtDetector,
    OneBitRaoDetector,
    decide,
    glrt_wilks_statistic,
    lrt_known_beta,
    rao_score,
    rao_statistic,
)
from .montecarlo import (
    EmpiricalCdf,
    ExactRaoDistribution,
    PartialTrialError,
    TrialPlan,
    TrialResult,
    cvm_error,
    empirical_ccdf,
    empirical_pd,
    enumerate_exact,
    run_trials,
)
from .scene import (
    Hypothesis,
    SceneConfig,
    beta_from_snr,
    lfm_waveform,
    quantize,
    snr_from_beta,
    spatial_signature,
    steering_vector,
    synthesize_received,
)
from .theory import (
    GaussianApprox,
    WeightedChiSquareSpec,
    fim_infbit_null,
    fim_onebit_null,
    gaussian_moments,
    glrt_noncentrality,
    glrt_pd,
    imhof_ccdf,
    log_q,
    loss_db,
    noncentral_chi2_ccdf,
    q_function,
    rao_lowsnr_noncentrality,
    rao_pd_imhof,
    rao_pd_lowsnr,
    rao_pfa,
    rao_threshold,
    rao_weighted_spec,
    sample_compensation_factor,
    weighted_spec_from_moments,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # scene
    "Hypothesis",
    "SceneConfig",
    "steering_vector",
    "lfm_waveform",
    "spatial_signature",
    "synthesize_received",
    "quantize",
    "beta_from_snr",
    "snr_from_beta",
    # detectors
    "rao_statistic",
    "rao_score",
    "glrt_wilks_statistic",
    "lrt_known_beta",
    "decide",
    "OneBitRaoDetector",
    "FullPrecisionGlrtDetector",
    "KnownReflectivityLrtDetector",
    # theory
    "q_function",
    "log_q",
    "rao_pfa",
    "rao_threshold",
    "GaussianApprox",
    "gaussian_moments",
    "WeightedChiSquareSpec",
    "weighted_spec_from_moments",
    "rao_weighted_spec",
    "imhof_ccdf",
    "noncentral_chi2_ccdf",
    "rao_pd_imhof",
    "rao_pd_lowsnr",
    "rao_lowsnr_noncentrality",
    "glrt_noncentrality",
    "glrt_pd",
    "fim_onebit_null",
    "fim_infbit_null",
    "loss_db",
    "sample_compensation_factor",
    # monte carlo
    "TrialPlan",
    "TrialResult",
    "PartialTrialError",
    "run_trials",
    "EmpiricalCdf",
    "empirical_ccdf",
    "empirical_pd",
    "cvm_error",
    "ExactRaoDistribution",
    "enumerate_exact",
]
