"""Resampling-based inference whose guarantees hold uniformly over families.

Subsampling and bootstrap approximations to the law of a root, quantile
constructions built on their generalized inverses, tests for moment
inequalities, a stepdown multiple-testing procedure, and a Monte Carlo
harness that measures worst-case coverage, size, and familywise error over
parameter grids chosen to include the known failure directions.
"""

from .bootstrap import BootstrapPlan, bootstrap_distribution, bootstrap_quantile, exhaustive_resamples
from .distcore import (
    StepDistribution,
    critical_value,
    dkw_bound,
    edf,
    edf_quantile,
    kolmogorov_distance,
    quantile,
    sup_diff,
)
from .families import (
    FAMILY_NAMES,
    Family,
    boundary_theta,
    make_family,
    oracle_root_distribution,
    sample_from,
)
from .harness import (
    EXPERIMENT_KINDS,
    ExperimentSpec,
    Report,
    coverage_deficit_check,
    dkw_check,
    drift_demo,
    mc_coverage,
    mc_fwer,
    mc_size,
    run_experiment,
    write_report,
)
from .inference import (
    GridRootSpec,
    Interval,
    IntervalSpec,
    LocationRootSpec,
    Plans,
    StepdownResult,
    TestDecision,
    confidence_interval,
    moment_test_bootstrap_aqlr,
    moment_test_subsampling,
    stepdown_fwer,
)
from .roots import (
    DegenerateSampleError,
    RootSpec,
    aqlr_root,
    constrained_mean_root,
    ks_root,
    max_studentized_mean_root,
    u_statistic,
    variance_kernel,
)
from .subsample import (
    BRule,
    SubsamplePlan,
    corrected_quantile,
    studentized_subsampling_quantile,
    subsampling_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapPlan",
    "bootstrap_distribution",
    "bootstrap_quantile",
    "exhaustive_resamples",
    "StepDistribution",
    "critical_value",
    "dkw_bound",
    "edf",
    "edf_quantile",
    "kolmogorov_distance",
    "quantile",
    "sup_diff",
    "FAMILY_NAMES",
    "Family",
    "boundary_theta",
    "make_family",
    "oracle_root_distribution",
    "sample_from",
    "EXPERIMENT_KINDS",
    "ExperimentSpec",
    "Report",
    "coverage_deficit_check",
    "dkw_check",
    "drift_demo",
    "mc_coverage",
    "mc_fwer",
    "mc_size",
    "run_experiment",
    "write_report",
    "GridRootSpec",
    "Interval",
    "IntervalSpec",
    "LocationRootSpec",
    "Plans",
    "StepdownResult",
    "TestDecision",
    "confidence_interval",
    "moment_test_bootstrap_aqlr",
    "moment_test_subsampling",
    "stepdown_fwer",
    "DegenerateSampleError",
    "RootSpec",
    "aqlr_root",
    "constrained_mean_root",
    "ks_root",
    "max_studentized_mean_root",
    "u_statistic",
    "variance_kernel",
    "BRule",
    "SubsamplePlan",
    "corrected_quantile",
    "studentized_subsampling_quantile",
    "subsampling_distribution",
    "__version__",
]
