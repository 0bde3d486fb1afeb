"""Bayesian sparse recovery over structured sensing matrices.

Observations follow y = A x + n with x Bernoulli-sparse. Columns of the
partial-DFT and subsampled-Toeplitz families decorrelate with index
distance, so above-threshold correlations are grouped into semi-orthogonal
clusters, each cluster is searched for its dominant supports with
order-recursive likelihood updates, and the per-cluster posteriors combine
into global MMSE/MAP estimates.
"""

from .bayes import (
    DegenerateSupportError,
    Hypothesis,
    PosteriorSet,
    blue_cond_expectation,
    exhaustive_mmse,
    gaussian_cond_expectation,
    gaussian_log_likelihood,
    map_support,
    mmse_over_supports,
    posterior_weights,
    unknown_log_likelihood,
)
from .baselines import OmpResult, mmse_refine, omp_recover
from .bench import (
    ExperimentSpec,
    TrialRecord,
    generate_instance,
    nmse,
    nmse_ratio,
    run_sweep,
    write_csv,
)
from .kernels import available_backends, backend_name
from .model import (
    DenseMatrix,
    MeasurementInstance,
    PartialDFT,
    SensingMatrix,
    SubsampledToeplitz,
    adjoint_apply,
    apply,
    coherence,
    column_correlation,
    dense_matrix,
    matrix_from_dict,
    partial_dft,
    subsampled_toeplitz,
)
from .oc import (
    Cluster,
    ClusterSet,
    OCConfig,
    OCResult,
    cluster_search,
    combine_estimates,
    find_dominant_positions,
    form_clusters,
    oc_recover,
)
from .priors import (
    GAUSSIAN,
    UNKNOWN,
    NoiseConfig,
    PriorConfig,
    cluster_max_support,
    correlation_threshold,
    erfc_inv,
    max_support_size,
    support_prior_log,
)
from .recursive import (
    DegenerateExtensionError,
    GaussianChainState,
    UnknownChainState,
    gaussian_chain_init,
    gaussian_extend,
    modulate_observation,
    unknown_chain_init,
    unknown_extend,
    window_observation,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "SensingMatrix",
    "PartialDFT",
    "SubsampledToeplitz",
    "DenseMatrix",
    "MeasurementInstance",
    "partial_dft",
    "subsampled_toeplitz",
    "dense_matrix",
    "matrix_from_dict",
    "column_correlation",
    "apply",
    "adjoint_apply",
    "coherence",
    # priors
    "GAUSSIAN",
    "UNKNOWN",
    "PriorConfig",
    "NoiseConfig",
    "support_prior_log",
    "max_support_size",
    "cluster_max_support",
    "correlation_threshold",
    "erfc_inv",
    # bayes
    "Hypothesis",
    "PosteriorSet",
    "DegenerateSupportError",
    "gaussian_log_likelihood",
    "unknown_log_likelihood",
    "gaussian_cond_expectation",
    "blue_cond_expectation",
    "posterior_weights",
    "mmse_over_supports",
    "exhaustive_mmse",
    "map_support",
    # recursive
    "DegenerateExtensionError",
    "GaussianChainState",
    "UnknownChainState",
    "gaussian_chain_init",
    "gaussian_extend",
    "unknown_chain_init",
    "unknown_extend",
    "modulate_observation",
    "window_observation",
    # kernels
    "backend_name",
    "available_backends",
    # oc
    "Cluster",
    "ClusterSet",
    "OCConfig",
    "OCResult",
    "find_dominant_positions",
    "form_clusters",
    "cluster_search",
    "combine_estimates",
    "oc_recover",
    # baselines
    "OmpResult",
    "omp_recover",
    "mmse_refine",
    # bench
    "ExperimentSpec",
    "TrialRecord",
    "generate_instance",
    "nmse",
    "nmse_ratio",
    "run_sweep",
    "write_csv",
]
