"""Confidence intervals, moment-inequality tests, and stepdown multiple testing.

Everything here turns a resampling estimate of a root's law into a
decision: two-sided intervals by inverting the event that the root lands
between two estimated quantiles, one-sided tests of componentwise
nonpositive means, and the iterative procedure that retests a shrinking
active set until nothing more can be rejected while controlling the
familywise error rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._indices import derive_seed, philox, random_subsets, resample_indices
from .bootstrap import BootstrapPlan, bootstrap_distribution
from .distcore import StepDistribution, as_sample, critical_value
from .roots import (
    AqlrRoot,
    DegenerateSampleError,
    MeanRoot,
    aqlr_root,
    moment_max_stat,
)
from .subsample import (
    MAX_DROP_FRAC,
    MeanEstimator,
    SubsamplePlan,
    batch_estimate,
    generate_subsamples,
    studentized_subsampling_distribution,
    subsampling_distribution,
)

__all__ = [
    "METHODS",
    "IntervalSpec",
    "Plans",
    "Interval",
    "LocationRootSpec",
    "GridRootSpec",
    "confidence_interval",
    "TestDecision",
    "moment_test_subsampling",
    "moment_test_bootstrap_aqlr",
    "StepRecord",
    "StepdownResult",
    "stepdown_fwer",
]

METHODS = (
    "subsampling-oracle",
    "subsampling-feasible",
    "subsampling-corrected",
    "subsampling-studentized",
    "bootstrap",
)


@dataclass(frozen=True)
class IntervalSpec:
    """Tail levels and quantile-estimation method for a two-sided interval.

    alpha1 is the lower-tail level, alpha2 the upper-tail level; the target
    coverage is 1 - alpha1 - alpha2, so the levels must leave that positive.
    """

    alpha1: float
    alpha2: float
    method: str

    def __post_init__(self):
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ValueError("tail levels must be nonnegative")
        if not self.alpha1 + self.alpha2 < 1.0:
            raise ValueError(
                f"alpha1 + alpha2 must be < 1, got {self.alpha1} + {self.alpha2}"
            )
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class Plans:
    """Resampling plans an interval or test may draw on."""

    subsample: SubsamplePlan | None = None
    bootstrap: BootstrapPlan | None = None

    def need_subsample(self) -> SubsamplePlan:
        if self.subsample is None:
            raise ValueError("this method needs plans.subsample")
        return self.subsample

    def need_bootstrap(self) -> BootstrapPlan:
        if self.bootstrap is None:
            raise ValueError("this method needs plans.bootstrap")
        return self.bootstrap


@dataclass(frozen=True)
class Interval:
    """Endpoint pair; empty marks a rejected-everywhere inversion, which is legal."""

    lower: float
    upper: float
    empty: bool = False
    non_convex: bool = False

    def __iter__(self):
        return iter((self.lower, self.upper))

    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class LocationRootSpec:
    """Location-style root tau_n (estimate - parameter): enough to invert in closed form.

    theta0 is the true center, consumed only by the oracle method; the
    studentized method additionally needs the scale estimator.
    """

    estimator: Callable = field(default_factory=MeanEstimator)
    sigma: Callable | None = None
    tau_exponent: float = 0.5
    theta0: float | None = None


@dataclass(frozen=True)
class GridRootSpec:
    """Test inversion over an explicit parameter grid.

    ``root_for_theta`` builds the root evaluator at a candidate theta; it is
    used both on the data (the test statistic) and, by default, on the
    resamples (null-imposed critical values). Passing
    ``resample_root_for_theta`` switches the resampled side, e.g. to a
    plug-in-recentered root independent of theta.
    """

    grid: tuple[float, ...]
    root_for_theta: Callable[[float], Callable]
    resample_root_for_theta: Callable[[float], Callable] | None = None

    def __post_init__(self):
        grid = tuple(float(t) for t in self.grid)
        if not grid:
            raise ValueError("grid must be nonempty")
        object.__setattr__(self, "grid", grid)


def _corrected_critical(dist: StepDistribution, alpha: float, factor: float) -> float:
    if alpha == 0.0:
        return -math.inf
    if alpha == 1.0:
        return math.inf
    return factor * dist.quantile(alpha)


def _location_interval(data: np.ndarray, root_spec: LocationRootSpec,
                       spec: IntervalSpec, plans: Plans) -> Interval:
    est = root_spec.estimator
    te = root_spec.tau_exponent
    n = data.shape[0]
    tau_n = float(n) ** te
    theta_hat = float(est(data))

    if spec.method == "bootstrap":
        dist = bootstrap_distribution(data, MeanRootLike(est, theta_hat, te), plans.need_bootstrap())
        lo_c = critical_value(dist, spec.alpha1)
        hi_c = critical_value(dist, 1.0 - spec.alpha2)
        scale = 1.0 / tau_n
    elif spec.method in ("subsampling-feasible", "subsampling-oracle"):
        center = theta_hat
        if spec.method == "subsampling-oracle":
            if root_spec.theta0 is None:
                raise ValueError("subsampling-oracle needs root_spec.theta0")
            center = float(root_spec.theta0)
        dist = subsampling_distribution(
            data, MeanRootLike(est, center, te), plans.need_subsample()
        )
        lo_c = critical_value(dist, spec.alpha1)
        hi_c = critical_value(dist, 1.0 - spec.alpha2)
        scale = 1.0 / tau_n
    elif spec.method == "subsampling-corrected":
        plan = plans.need_subsample()
        dist = subsampling_distribution(data, MeanRootLike(est, theta_hat, te), plan)
        factor = tau_n / (tau_n + float(plan.b) ** te)
        lo_c = _corrected_critical(dist, spec.alpha1, factor)
        hi_c = _corrected_critical(dist, 1.0 - spec.alpha2, factor)
        scale = 1.0 / tau_n
    elif spec.method == "subsampling-studentized":
        if root_spec.sigma is None:
            raise ValueError("subsampling-studentized needs root_spec.sigma")
        dist = studentized_subsampling_distribution(
            data, est, root_spec.sigma, plans.need_subsample(), te
        )
        lo_c = critical_value(dist, spec.alpha1)
        hi_c = critical_value(dist, 1.0 - spec.alpha2)
        scale = float(root_spec.sigma(data)) / tau_n
    else:  # pragma: no cover - IntervalSpec already validated the method
        raise ValueError(spec.method)

    return Interval(lower=theta_hat - hi_c * scale, upper=theta_hat - lo_c * scale)


@dataclass(frozen=True)
class MeanRootLike:
    """tau_m (estimator - center) lifted to the batch protocol of the engines."""

    estimator: Callable
    center: float
    tau_exponent: float = 0.5

    def __call__(self, data) -> float:
        data = as_sample(data)
        tau = float(data.shape[0]) ** self.tau_exponent
        return tau * (float(self.estimator(data)) - self.center)

    def batch(self, stacks) -> np.ndarray:
        stacks = np.asarray(stacks, dtype=np.float64)
        if stacks.ndim == 2:
            stacks = stacks[:, :, None]
        tau = float(stacks.shape[1]) ** self.tau_exponent
        return tau * (batch_estimate(self.estimator, stacks) - self.center)


def _grid_interval(data: np.ndarray, root_spec: GridRootSpec,
                   spec: IntervalSpec, plans: Plans) -> Interval:
    null_root = root_spec.resample_root_for_theta or root_spec.root_for_theta
    kept = []
    for theta in root_spec.grid:
        root = root_spec.root_for_theta(theta)
        r_n = float(root(data))
        if spec.method == "bootstrap":
            dist = bootstrap_distribution(data, null_root(theta), plans.need_bootstrap())
        elif spec.method in ("subsampling-feasible", "subsampling-oracle"):
            dist = subsampling_distribution(data, null_root(theta), plans.need_subsample())
        else:
            raise ValueError(f"grid inversion does not support method {spec.method!r}")
        lo_c = critical_value(dist, spec.alpha1)
        hi_c = critical_value(dist, 1.0 - spec.alpha2)
        kept.append(lo_c <= r_n <= hi_c)
    kept = np.asarray(kept)
    if not kept.any():
        return Interval(lower=math.nan, upper=math.nan, empty=True)
    idx = np.flatnonzero(kept)
    contiguous = bool(np.all(np.diff(idx) == 1))
    grid = np.asarray(root_spec.grid)
    return Interval(
        lower=float(grid[idx[0]]),
        upper=float(grid[idx[-1]]),
        non_convex=not contiguous,
    )


def confidence_interval(sample, root_spec, spec: IntervalSpec, plans: Plans) -> Interval:
    """Interval for the parameter behind a root, by the configured method.

    Location roots invert the quantile event in closed form:
    [theta_hat - c(1-alpha2) * s, theta_hat - c(alpha1) * s] with s the root's
    scale at the full sample, so a zero tail level opens that side to
    infinity. Grid specs run test inversion and report the hull of the
    accepted candidates, flagging gaps instead of hiding them.
    """
    data = as_sample(sample)
    if isinstance(root_spec, LocationRootSpec):
        if data.shape[1] != 1:
            raise ValueError("location intervals expect univariate samples")
        return _location_interval(data, root_spec, spec, plans)
    if isinstance(root_spec, GridRootSpec):
        return _grid_interval(data, root_spec, spec, plans)
    raise TypeError(f"unsupported root spec {type(root_spec).__name__}")


# ---------------------------------------------------------------------------
# moment-inequality tests


@dataclass(frozen=True)
class TestDecision:
    """One test outcome with everything needed to audit it."""

    statistic: float
    critical_value: float
    alpha: float
    method: str
    reject: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "method": self.method,
            "reject": self.reject,
            "step_trace": [],
            **({"details": self.details} if self.details else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _moments(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = data.mean(axis=0)
    sd = np.sqrt(np.maximum((data * data).mean(axis=0) - mean * mean, 0.0))
    return mean, sd


def _studentized_stats(data: np.ndarray) -> np.ndarray:
    n, k = data.shape
    mean, sd = _moments(data)
    if np.any(sd == 0.0):
        raise DegenerateSampleError("degenerate coordinate: zero variance")
    return math.sqrt(n) * mean / sd


def moment_test_subsampling(sample, alpha: float, plan: SubsamplePlan) -> TestDecision:
    """One-sided test of componentwise nonpositive means via the max statistic.

    The critical value is the (1-alpha) quantile of the same uncentered max
    statistic recomputed on subsamples; the root's pivot comes from its own
    scaling, so no recentering is applied.
    """
    data = as_sample(sample)
    stat = moment_max_stat(data)
    dist = subsampling_distribution(data, _SubsampleMaxStat(), plan)
    crit = float(dist.quantile(1.0 - alpha)) if alpha > 0.0 else math.inf
    return TestDecision(
        statistic=float(stat),
        critical_value=crit,
        alpha=alpha,
        method="subsampling",
        reject=bool(stat > crit),
    )


@dataclass(frozen=True)
class _SubsampleMaxStat:
    """Uncentered max studentized mean, sized by the subsample itself."""

    def __call__(self, data) -> float:
        return float(np.max(_studentized_stats(as_sample(data))))

    def batch(self, stacks) -> np.ndarray:
        stacks = np.asarray(stacks, dtype=np.float64)
        if stacks.ndim == 2:
            stacks = stacks[:, :, None]
        B, m, k = stacks.shape
        mean = stacks.mean(axis=1)
        sd = np.sqrt(np.maximum((stacks * stacks).mean(axis=1) - mean * mean, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = math.sqrt(m) * mean / sd
        out = np.max(z, axis=1)
        return np.where((sd > 0.0).all(axis=1), out, np.nan)


def moment_test_bootstrap_aqlr(sample, alpha: float, eps: float, plan: BootstrapPlan) -> TestDecision:
    """One-sided moment test with the regularized quadratic-distance statistic.

    The statistic measures the distance from the studentized mean vector to
    the nonpositive orthant in the regularized-correlation metric; its
    critical value is the (1-alpha) quantile of the same statistic on
    resamples recentered at the sample mean.
    """
    data = as_sample(sample)
    stat = aqlr_root(data, 0.0, eps)
    center = data.mean(axis=0)
    dist = bootstrap_distribution(data, AqlrRoot(center=tuple(center), eps=eps), plan)
    crit = float(dist.quantile(1.0 - alpha)) if alpha > 0.0 else math.inf
    return TestDecision(
        statistic=float(stat),
        critical_value=crit,
        alpha=alpha,
        method="bootstrap-aqlr",
        reject=bool(stat > crit),
        details={"eps": eps},
    )


# ---------------------------------------------------------------------------
# stepdown multiple testing


@dataclass(frozen=True)
class StepRecord:
    """One step: who was active, the bar they faced, who fell."""

    active: tuple[int, ...]
    critical_value: float
    rejected: tuple[int, ...]


@dataclass(frozen=True)
class StepdownResult:
    rejected: tuple[int, ...]
    steps: tuple[StepRecord, ...]
    statistics: tuple[float, ...]
    alpha: float
    method: str

    def as_dict(self) -> dict:
        return {
            "statistic": list(self.statistics),
            "critical_value": self.steps[0].critical_value if self.steps else None,
            "alpha": self.alpha,
            "method": self.method,
            "step_trace": [
                {
                    "active": list(s.active),
                    "critical_value": s.critical_value,
                    "rejected": list(s.rejected),
                }
                for s in self.steps
            ],
            "rejected": list(self.rejected),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _stepdown_matrix(data: np.ndarray, method: str, plan, seed: int) -> np.ndarray:
    """Per-draw, per-coordinate studentized values feeding every step."""
    n, k = data.shape
    if method == "subsampling":
        idx = random_subsets(philox(seed), plan.draws, n, plan.b) \
            if plan.mode == "random" else generate_subsamples(plan)
        stacks = data[idx]
        m = plan.b
        mean = stacks.mean(axis=1)
        sd = np.sqrt(np.maximum((stacks * stacks).mean(axis=1) - mean * mean, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = math.sqrt(m) * mean / sd
    elif method == "bootstrap":
        if plan.mode != "monte-carlo":
            raise ValueError("stepdown bootstrap supports monte-carlo plans only")
        idx = resample_indices(philox(seed), plan.draws, n)
        stacks = data[idx]
        center = data.mean(axis=0)
        mean = stacks.mean(axis=1)
        sd = np.sqrt(np.maximum((stacks * stacks).mean(axis=1) - mean * mean, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            z = math.sqrt(n) * (mean - center) / sd
    else:
        raise ValueError(f"method must be 'subsampling' or 'bootstrap', got {method!r}")
    return np.where(sd > 0.0, z, np.nan)


def stepdown_fwer(
    sample,
    alpha: float,
    method: str,
    plan,
    *,
    common_draws: bool = True,
    max_drop_frac: float = MAX_DROP_FRAC,
) -> StepdownResult:
    """Iterative max-statistic testing over a shrinking active set.

    Each step takes the (1-alpha) quantile of the max of the per-draw
    studentized values over the currently active coordinates and rejects
    strict exceeders; it stops when a step rejects nothing. Draws are shared
    across steps by default, which makes the critical values provably
    nonincreasing; ``common_draws=False`` redraws per step instead.

    Rows degenerate in any coordinate are dropped once, up front, under the
    usual policy, so every step sees the same draw set.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    data = as_sample(sample)
    n, k = data.shape
    if plan.n != n:
        raise ValueError(f"plan.n={plan.n} does not match sample size {n}")
    t = _studentized_stats(data)

    matrix = _stepdown_matrix(data, method, plan, plan.seed)
    active = list(range(k))
    rejected: list[int] = []
    steps: list[StepRecord] = []
    step = 0
    while active:
        finite = np.isfinite(matrix).all(axis=1)
        if finite.sum() == 0:
            raise DegenerateSampleError("all draws degenerate in some coordinate")
        if matrix.shape[0] - finite.sum() > max_drop_frac * matrix.shape[0]:
            raise DegenerateSampleError(
                f"{matrix.shape[0] - finite.sum()} of {matrix.shape[0]} draws degenerate, "
                f"above the {max_drop_frac:.1%} policy limit"
            )
        rows = matrix[finite][:, active].max(axis=1)
        crit = float(StepDistribution.from_values(rows).quantile(1.0 - alpha))
        newly = tuple(j for j in active if t[j] > crit)
        steps.append(StepRecord(active=tuple(active), critical_value=crit, rejected=newly))
        if not newly:
            break
        rejected.extend(newly)
        active = [j for j in active if j not in newly]
        step += 1
        if active and not common_draws:
            matrix = _stepdown_matrix(data, method, plan, derive_seed(plan.seed, step))
    return StepdownResult(
        rejected=tuple(sorted(rejected)),
        steps=tuple(steps),
        statistics=tuple(float(v) for v in t),
        alpha=alpha,
        method=method,
    )
