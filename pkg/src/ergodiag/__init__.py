"""Diagnostics for convergence of time averages of non-stationary series.

Decides, exactly for specified process models and empirically for sampled
paths, whether running averages settle on the average of the means: exact
variance identities, growth classification of the covariance sum,
correlation time and effective sample size, concentration bounds, and a
Monte Carlo verification harness with a CLI front end.
"""

from .bounds import (
    BoundReport,
    bound_report,
    chebyshev_bound,
    markov_bound,
    paley_zygmund_lower,
    paley_zygmund_theta,
)
from .estimators import (
    AutocovEstimate,
    Ensemble,
    PathOrigin,
    SamplePath,
    TauEstimate,
    empirical_tail,
    ensemble_mse,
    estimate_tau,
    running_averages,
    sample_autocovariance,
    time_average,
    vector_norm_gap,
)
from .harness import (
    Check,
    ConvergenceReport,
    ExperimentConfig,
    PerNStats,
    Verdict,
    default_checks,
    run_experiment,
    verify_fourth_moment,
    verify_nonconvergence,
    verify_variance_identity,
    worker_count,
)
from .model import (
    NON_SUMMABLE,
    DegenerateSeriesError,
    EssResult,
    GrowthClass,
    GrowthReport,
    NonSummable,
    ProcessSpec,
    StationaryCov,
    classify_growth,
    correlation_time,
    covariance_sum,
    effective_sample_size,
    mean_average,
    time_average_variance,
)
from .processes import (
    Family,
    ProcessConfig,
    RngSeed,
    SparseSpikeMoments,
    build_spec,
    derive_stream,
    enumerate_squared_average_variance,
    sample_ensemble,
    sample_path,
    sparse_spike_moments,
    sparse_spike_squared_average_variance,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "DegenerateSeriesError",
    "NON_SUMMABLE",
    "NonSummable",
    "ProcessSpec",
    "StationaryCov",
    "GrowthClass",
    "GrowthReport",
    "EssResult",
    "mean_average",
    "covariance_sum",
    "time_average_variance",
    "correlation_time",
    "effective_sample_size",
    "classify_growth",
    # estimators
    "SamplePath",
    "PathOrigin",
    "Ensemble",
    "AutocovEstimate",
    "TauEstimate",
    "time_average",
    "running_averages",
    "sample_autocovariance",
    "estimate_tau",
    "ensemble_mse",
    "empirical_tail",
    "vector_norm_gap",
    # bounds
    "markov_bound",
    "chebyshev_bound",
    "paley_zygmund_lower",
    "paley_zygmund_theta",
    "BoundReport",
    "bound_report",
    # processes
    "Family",
    "ProcessConfig",
    "RngSeed",
    "derive_stream",
    "build_spec",
    "sample_path",
    "sample_ensemble",
    "SparseSpikeMoments",
    "sparse_spike_moments",
    "sparse_spike_squared_average_variance",
    "enumerate_squared_average_variance",
    # harness
    "Check",
    "Verdict",
    "ExperimentConfig",
    "PerNStats",
    "ConvergenceReport",
    "run_experiment",
    "verify_variance_identity",
    "verify_nonconvergence",
    "verify_fourth_moment",
    "default_checks",
    "worker_count",
]
