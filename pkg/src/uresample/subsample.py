"""Subsampling distribution estimation.

Estimates the sampling law of a root by evaluating it on size-b subsets of
the observed data, drawn without replacement: every subset in lexicographic
order when C(n, b) is small enough to enumerate, otherwise B uniformly
random subsets generated deterministically from the plan seed. The result
is a :class:`~uresample.distcore.StepDistribution` over root values.

The feasible estimators recenter each subsample statistic at the
full-sample estimate; :func:`corrected_quantile` additionally multiplies
quantiles by the scale ratio tau_n / (tau_n + tau_b), the adjustment that
compensates for recentering a non-studentized root at an estimate rather
than the true parameter. The studentized construction divides by a
per-subsample scale estimate instead and needs no correction factor, at
the price of requiring the scale ratio tau_b / tau_n to be small.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._indices import philox, random_subsets
from .distcore import StepDistribution, as_sample, check_level
from .roots import DegenerateSampleError

__all__ = [
    "EXHAUSTIVE_CAP",
    "SubsamplePlan",
    "BRule",
    "ResampleDiagnostics",
    "generate_subsamples",
    "subsample_root_values",
    "subsampling_distribution",
    "corrected_quantile",
    "studentized_subsampling_distribution",
    "studentized_subsampling_quantile",
    "MeanEstimator",
    "SdEstimator",
    "batch_estimate",
]

#: Exhaustive enumeration is refused above this many subsets.
EXHAUSTIVE_CAP = 1_000_000

#: Default number of random subsample draws.
DEFAULT_DRAWS = 2000

#: Fraction of degenerate-root draws tolerated before the engine errors out.
MAX_DROP_FRAC = 0.01


@dataclass(frozen=True)
class SubsamplePlan:
    """How to draw subsamples: sizes, mode, draw count, seed."""

    n: int
    b: int
    mode: str = "random"
    draws: int = DEFAULT_DRAWS
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random"):
            raise ValueError(f"mode must be 'exhaustive' or 'random', got {self.mode!r}")
        if not 1 <= self.b < self.n:
            raise ValueError(f"need 1 <= b < n, got b={self.b}, n={self.n}")
        if self.mode == "random" and self.draws < 1:
            raise ValueError("draws must be >= 1")
        if self.mode == "exhaustive" and math.comb(self.n, self.b) > EXHAUSTIVE_CAP:
            raise ValueError(
                f"C({self.n},{self.b}) = {math.comb(self.n, self.b)} exceeds the "
                f"enumeration cap {EXHAUSTIVE_CAP}; use random mode"
            )

    @classmethod
    def auto(cls, n: int, b: int, draws: int = DEFAULT_DRAWS, seed: int = 0) -> "SubsamplePlan":
        """Exhaustive when enumerable under the cap, random otherwise."""
        mode = "exhaustive" if math.comb(n, b) <= EXHAUSTIVE_CAP else "random"
        return cls(n=n, b=b, mode=mode, draws=draws, seed=seed)


@dataclass(frozen=True)
class BRule:
    """Subsample-size rule b = floor(n^gamma), floored at 2 and capped at n-1.

    gamma in (0, 1) guarantees b -> infinity with b/n -> 0, the regime the
    uniform subsampling guarantees require.
    """

    gamma: float = 0.5
    floor: int = 2

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.floor < 2:
            raise ValueError("floor must be at least 2")

    def subsample_size(self, n: int) -> int:
        if n <= self.floor:
            raise ValueError(f"n={n} too small for floor {self.floor}")
        return min(n - 1, max(self.floor, int(math.floor(n ** self.gamma))))


@dataclass
class ResampleDiagnostics:
    """Filled by the engines: how many draws ran and how many were dropped."""

    n_draws: int = 0
    n_dropped: int = 0


def generate_subsamples(plan: SubsamplePlan) -> np.ndarray:
    """Index matrix of subsamples, one row per draw.

    Exhaustive mode enumerates all C(n, b) subsets in lexicographic order;
    random mode derives row i entirely from (plan.seed, i) through a
    counter-based stream, so the sequence is reproducible and independent
    of how the rows are later consumed.
    """
    if plan.mode == "exhaustive":
        combos = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(plan.n), plan.b)),
            dtype=np.intp,
            count=math.comb(plan.n, plan.b) * plan.b,
        )
        return combos.reshape(-1, plan.b)
    return random_subsets(philox(plan.seed), plan.draws, plan.n, plan.b)


def subsample_root_values(sample, root, plan: SubsamplePlan) -> tuple[np.ndarray, int]:
    """Root values over generated subsamples plus the degenerate-drop count.

    ``root`` is evaluated through its vectorized ``batch`` method when it has
    one (NaN rows mean degenerate draws); plain callables are looped, with
    DegenerateSampleError treated as a drop.
    """
    data = as_sample(sample)
    if data.shape[0] != plan.n:
        raise ValueError(f"plan.n={plan.n} does not match sample size {data.shape[0]}")
    idx = generate_subsamples(plan)
    stacks = data[idx]  # (N, b, k)
    batch = getattr(root, "batch", None)
    if batch is not None:
        values = np.asarray(batch(stacks), dtype=np.float64)
    else:
        values = np.empty(stacks.shape[0])
        for i in range(stacks.shape[0]):
            try:
                values[i] = root(stacks[i])
            except DegenerateSampleError:
                values[i] = np.nan
    keep = np.isfinite(values)
    return values[keep], int(values.size - keep.sum())


def _checked_distribution(values: np.ndarray, dropped: int, max_drop_frac: float,
                          diagnostics: ResampleDiagnostics | None) -> StepDistribution:
    total = values.size + dropped
    if diagnostics is not None:
        diagnostics.n_draws = total
        diagnostics.n_dropped = dropped
    if values.size == 0:
        raise DegenerateSampleError("all draws degenerate; no root values to aggregate")
    if dropped > max_drop_frac * total:
        raise DegenerateSampleError(
            f"{dropped} of {total} draws degenerate, above the {max_drop_frac:.1%} policy limit"
        )
    return StepDistribution.from_values(values)


def subsampling_distribution(
    sample,
    root,
    plan: SubsamplePlan,
    *,
    max_drop_frac: float = MAX_DROP_FRAC,
    diagnostics: ResampleDiagnostics | None = None,
) -> StepDistribution:
    """Step CDF of root values over subsamples (sorted merge, ties pooled).

    The oracle form passes a root carrying true parameters; the feasible
    form passes one recentered at full-sample plug-ins. Degenerate draws are
    dropped and counted; more than ``max_drop_frac`` of them is an error.
    """
    values, dropped = subsample_root_values(sample, root, plan)
    return _checked_distribution(values, dropped, max_drop_frac, diagnostics)


# ---------------------------------------------------------------------------
# estimator evaluators for the corrected / studentized constructions


@dataclass(frozen=True)
class MeanEstimator:
    """Sample mean of a univariate sample."""

    def __call__(self, data) -> float:
        return float(as_sample(data, k=1).mean())

    def batch(self, stacks: np.ndarray) -> np.ndarray:
        return np.asarray(stacks, dtype=np.float64)[:, :, 0].mean(axis=1)


@dataclass(frozen=True)
class SdEstimator:
    """Divisor-m standard deviation of a univariate sample."""

    def __call__(self, data) -> float:
        col = as_sample(data, k=1)[:, 0]
        return float(np.sqrt(max(np.mean(col * col) - np.mean(col) ** 2, 0.0)))

    def batch(self, stacks: np.ndarray) -> np.ndarray:
        col = np.asarray(stacks, dtype=np.float64)[:, :, 0]
        mean = col.mean(axis=1)
        return np.sqrt(np.maximum((col * col).mean(axis=1) - mean * mean, 0.0))


def batch_estimate(estimator, stacks: np.ndarray) -> np.ndarray:
    """Evaluate an estimator on a (N, b, k) stack, looping when it has no batch method."""
    batch = getattr(estimator, "batch", None)
    if batch is not None:
        return np.asarray(batch(stacks), dtype=np.float64)
    return np.array([float(estimator(stacks[i])) for i in range(stacks.shape[0])])


def _tau(m: int, tau_exponent: float) -> float:
    return float(m) ** tau_exponent


def corrected_quantile(
    sample,
    theta_hat,
    plan: SubsamplePlan,
    alpha: float,
    tau_exponent: float = 0.5,
) -> float:
    """Rate-corrected quantile of the recentered non-studentized subsampling law.

    Builds the distribution of tau_b * (theta_hat(subsample) - theta_hat(full))
    and scales its alpha-quantile by tau_n / (tau_n + tau_b).
    """
    alpha = check_level(alpha)
    data = as_sample(sample)
    center = float(theta_hat(data))
    idx = generate_subsamples(plan)
    stats = batch_estimate(theta_hat, data[idx])
    values = _tau(plan.b, tau_exponent) * (stats - center)
    dist = _checked_distribution(values[np.isfinite(values)], int(np.sum(~np.isfinite(values))),
                                 MAX_DROP_FRAC, None)
    factor = _tau(plan.n, tau_exponent) / (_tau(plan.n, tau_exponent) + _tau(plan.b, tau_exponent))
    return factor * dist.quantile(alpha)


def studentized_subsampling_distribution(
    sample,
    theta_hat,
    sigma_hat,
    plan: SubsamplePlan,
    tau_exponent: float = 0.5,
    *,
    max_drop_frac: float = MAX_DROP_FRAC,
    diagnostics: ResampleDiagnostics | None = None,
) -> StepDistribution:
    """Law of the studentized recentered subsample statistic.

    Subsample statistics are centered at the full-sample estimate and divided
    by the per-subsample scale estimate; draws with a nonpositive scale are
    dropped under the usual policy, and all-degenerate input is an error.
    """
    data = as_sample(sample)
    center = float(theta_hat(data))
    idx = generate_subsamples(plan)
    stacks = data[idx]
    stats = batch_estimate(theta_hat, stacks)
    scales = batch_estimate(sigma_hat, stacks)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = _tau(plan.b, tau_exponent) * (stats - center) / scales
    values = np.where(scales > 0.0, values, np.nan)
    keep = np.isfinite(values)
    return _checked_distribution(values[keep], int(values.size - keep.sum()),
                                 max_drop_frac, diagnostics)


def studentized_subsampling_quantile(
    sample,
    theta_hat,
    sigma_hat,
    plan: SubsamplePlan,
    alpha: float,
    tau_exponent: float = 0.5,
    *,
    max_drop_frac: float = MAX_DROP_FRAC,
    diagnostics: ResampleDiagnostics | None = None,
) -> float:
    """Quantile of the studentized recentered subsampling law (no correction factor)."""
    alpha = check_level(alpha)
    dist = studentized_subsampling_distribution(
        sample, theta_hat, sigma_hat, plan, tau_exponent,
        max_drop_frac=max_drop_frac, diagnostics=diagnostics,
    )
    return dist.quantile(alpha)
