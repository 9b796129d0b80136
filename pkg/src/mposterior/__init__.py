"""Robust aggregation of subset posterior samples via medians of measures.

Posterior draws from disjoint data subsets are embedded as discrete measures
in the RKHS of a characteristic kernel; the aggregate is the geometric
median of the embeddings (a weighted mixture found by Weiszfeld's
algorithm, with small weights thresholded away) or the metric median picked
from pairwise distances alone.
"""

from ._accel import active_backend, available_backends
from .bayes import (
    FlatPrior,
    GaussianPosterior,
    GPModel,
    NormalPrior,
    PartitionPlan,
    PartitionStrategy,
    gaussian_subset_posterior,
    gp_subset_posterior,
    partition,
    read_data_csv,
    sample_gaussian,
)
from .harness import (
    ConcentrationReport,
    CoverageReport,
    GPExperimentConfig,
    GPReport,
    MPosteriorConfig,
    OutlierExperimentConfig,
    consensus_baseline,
    m_posterior,
    resolve_kernel,
    run_concentration_check,
    run_gp_experiment,
    run_outlier_experiment,
    select_m_sweep,
    target_curve,
)
from .kernels import (
    GaussianKernel,
    KernelSpec,
    MahalanobisKernel,
    eval_kernel,
    gram,
    hellinger_expfam,
    hellinger_gaussian,
    inner_product,
    kernel_from_config,
    kernel_to_config,
    median_bandwidth,
    mmd,
    mmd_squared,
    rho_k,
)
from .measures import (
    EmpiricalMeasure,
    make_empirical,
    mixture,
    prune_zero_atoms,
    read_draws,
    weighted_quantile,
    write_draws,
)
from .medians import (
    ConcentrationParams,
    InnerProductMatrix,
    MetricMedianResult,
    WeiszfeldResult,
    inner_product_matrix,
    metric_median,
    psi,
    select_m,
    threshold_weights,
    weiszfeld,
)

__version__ = "0.1.0"

__all__ = [
    "ConcentrationParams",
    "ConcentrationReport",
    "CoverageReport",
    "EmpiricalMeasure",
    "FlatPrior",
    "GPExperimentConfig",
    "GPModel",
    "GPReport",
    "GaussianKernel",
    "GaussianPosterior",
    "InnerProductMatrix",
    "KernelSpec",
    "MPosteriorConfig",
    "MahalanobisKernel",
    "MetricMedianResult",
    "NormalPrior",
    "OutlierExperimentConfig",
    "PartitionPlan",
    "PartitionStrategy",
    "WeiszfeldResult",
    "active_backend",
    "available_backends",
    "consensus_baseline",
    "eval_kernel",
    "gaussian_subset_posterior",
    "gp_subset_posterior",
    "gram",
    "hellinger_expfam",
    "hellinger_gaussian",
    "inner_product",
    "inner_product_matrix",
    "kernel_from_config",
    "kernel_to_config",
    "m_posterior",
    "make_empirical",
    "median_bandwidth",
    "metric_median",
    "mixture",
    "mmd",
    "mmd_squared",
    "partition",
    "prune_zero_atoms",
    "psi",
    "read_data_csv",
    "read_draws",
    "resolve_kernel",
    "rho_k",
    "run_concentration_check",
    "run_gp_experiment",
    "run_outlier_experiment",
    "sample_gaussian",
    "select_m",
    "select_m_sweep",
    "target_curve",
    "threshold_weights",
    "weighted_quantile",
    "weiszfeld",
    "write_draws",
]
