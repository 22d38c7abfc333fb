"""Nonparametric bootstrap distribution estimation.

Estimates the sampling law of a root by evaluating it on samples redrawn
with replacement from the observed data, which amounts to sampling from
the empirical distribution. Monte Carlo mode draws B resamples from a
counter-based stream; exhaustive mode enumerates every distinct multiset
of indices together with its exact multinomial probability, so small-n
results carry no simulation noise and serve as oracles in tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._indices import philox, resample_indices
from .distcore import StepDistribution, as_sample, check_level
from .roots import DegenerateSampleError
from .subsample import MAX_DROP_FRAC, ResampleDiagnostics

__all__ = [
    "EXHAUSTIVE_CAP",
    "BootstrapPlan",
    "generate_resamples",
    "exhaustive_resamples",
    "bootstrap_root_values",
    "bootstrap_distribution",
    "bootstrap_quantile",
]

#: Exhaustive enumeration is refused when n**n exceeds this.
EXHAUSTIVE_CAP = 10_000_000

#: Default number of Monte Carlo resamples.
DEFAULT_DRAWS = 2000


@dataclass(frozen=True)
class BootstrapPlan:
    """How to resample: sample size, mode, draw count, seed."""

    n: int
    draws: int = DEFAULT_DRAWS
    mode: str = "monte-carlo"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("monte-carlo", "exhaustive"):
            raise ValueError(f"mode must be 'monte-carlo' or 'exhaustive', got {self.mode!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.mode == "monte-carlo" and self.draws < 1:
            raise ValueError("draws must be >= 1")
        if self.mode == "exhaustive" and self.n ** self.n > EXHAUSTIVE_CAP:
            raise ValueError(
                f"{self.n}**{self.n} = {self.n ** self.n} exceeds the enumeration "
                f"cap {EXHAUSTIVE_CAP}; use monte-carlo mode"
            )


def generate_resamples(plan: BootstrapPlan) -> np.ndarray:
    """(draws, n) index matrix for Monte Carlo mode, reproducible from the seed."""
    if plan.mode != "monte-carlo":
        raise ValueError("generate_resamples applies to monte-carlo mode only")
    return resample_indices(philox(plan.seed), plan.draws, plan.n)


def exhaustive_resamples(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All distinct index multisets of size n with their exact probabilities.

    Rows are sorted index tuples; the weight of a row with repeat counts
    (c_1, ..., c_n) is the multinomial coefficient n!/(c_1! ... c_n!)
    divided by n**n. The integer arithmetic is exact, so the weights are
    correctly rounded floats.
    """
    rows = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations_with_replacement(range(n), n)),
        dtype=np.intp,
        count=math.comb(2 * n - 1, n) * n,
    ).reshape(-1, n)
    total = n ** n
    base = math.factorial(n)
    weights = np.empty(rows.shape[0])
    for i, row in enumerate(rows):
        _, counts = np.unique(row, return_counts=True)
        coef = base
        for c in counts:
            coef //= math.factorial(int(c))
        weights[i] = coef / total
    return rows, weights


def bootstrap_root_values(sample, root, plan: BootstrapPlan) -> tuple[np.ndarray, np.ndarray | None, float]:
    """Root values over resamples: (values, weights or None, dropped fraction).

    Weights are None in Monte Carlo mode (equal-weight draws). Degenerate
    draws are removed; the returned fraction counts them by weight.
    """
    data = as_sample(sample)
    if data.shape[0] != plan.n:
        raise ValueError(f"plan.n={plan.n} does not match sample size {data.shape[0]}")
    if plan.mode == "exhaustive":
        idx, weights = exhaustive_resamples(plan.n)
    else:
        idx, weights = generate_resamples(plan), None
    stacks = data[idx]
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
    if weights is None:
        dropped = float(values.size - keep.sum()) / values.size
        return values[keep], None, dropped
    dropped = float(weights[~keep].sum())
    kept_w = weights[keep]
    if kept_w.sum() > 0.0:
        kept_w = kept_w / kept_w.sum()
    return values[keep], kept_w, dropped


def bootstrap_distribution(
    sample,
    root,
    plan: BootstrapPlan,
    *,
    max_drop_frac: float = MAX_DROP_FRAC,
    diagnostics: ResampleDiagnostics | None = None,
) -> StepDistribution:
    """Step CDF of root values over resamples, exact-weighted in exhaustive mode.

    The root is handed resampled data only; recentering at full-sample
    plug-ins is the root's own job, which keeps the oracle and feasible
    constructions on the same code path.
    """
    values, weights, dropped = bootstrap_root_values(sample, root, plan)
    if diagnostics is not None:
        diagnostics.n_draws = values.size
        diagnostics.n_dropped = int(round(dropped * max(values.size, 1)))
    if values.size == 0:
        raise DegenerateSampleError("all resamples degenerate; no root values to aggregate")
    if dropped > max_drop_frac:
        raise DegenerateSampleError(
            f"degenerate resample fraction {dropped:.4f} above the {max_drop_frac:.1%} policy limit"
        )
    return StepDistribution.from_values(values, weights)


def bootstrap_quantile(sample, root, plan: BootstrapPlan, alpha: float, **kwargs) -> float:
    """Generalized-inverse quantile of the bootstrap law; 0 maps to -inf."""
    alpha = check_level(alpha)
    return bootstrap_distribution(sample, root, plan, **kwargs).quantile(alpha)
