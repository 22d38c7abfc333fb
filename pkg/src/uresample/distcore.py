"""Finite step distributions and exact CDF algebra.

Everything downstream (subsampling, bootstrap, the Monte Carlo harness)
represents estimated sampling distributions as finite step CDFs. This module
owns that representation and the handful of operations whose exactness the
rest of the package leans on: right-continuous evaluation, left limits,
generalized inverse quantiles, one-sided sup deviations, and the
block-counting deviation bound used by the finite-sample diagnostics.

Evaluation never interpolates. ``cdf``/``cdf_left`` return stored cumulative
values, so differences of two step CDFs are exact float subtractions of
stored numbers, which is what lets the quantile-inequality test suite demand
zero violations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StepDistribution",
    "as_sample",
    "check_level",
    "edf",
    "edf_quantile",
    "quantile",
    "critical_value",
    "sup_diff",
    "kolmogorov_distance",
    "dkw_bound",
]

#: Slack allowed between the final cumulative probability and 1.
CUM_TOL = 1e-12


def as_sample(data, k: int | None = None) -> np.ndarray:
    """Coerce ``data`` to a float64 observation matrix of shape (n, k).

    1-d input becomes a single-column matrix. Raises on empty input, NaNs,
    or a column-count mismatch when ``k`` is given.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"sample must be 1-d or 2-d, got ndim={arr.ndim}")
    if arr.shape[0] == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    if k is not None and arr.shape[1] != k:
        raise ValueError(f"expected {k} columns, got {arr.shape[1]}")
    return arr


def check_level(alpha: float, name: str = "alpha") -> float:
    """Validate a probability level in [0, 1] and return it as a float."""
    alpha = float(alpha)
    if math.isnan(alpha) or not 0.0 <= alpha <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {alpha}")
    return alpha


@dataclass(frozen=True)
class StepDistribution:
    """A finite right-continuous step CDF.

    ``support`` is strictly increasing; ``cum_probs[i]`` is the probability
    of the closed lower set (-inf, support[i]]. The final cumulative value
    must equal 1 within ``CUM_TOL`` and is snapped to exactly 1.0 so that
    the generalized inverse is well defined at level 1.
    """

    support: np.ndarray
    cum_probs: np.ndarray
    _masses: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        cum = np.asarray(self.cum_probs, dtype=np.float64)
        if support.ndim != 1 or cum.ndim != 1 or support.shape != cum.shape:
            raise ValueError("support and cum_probs must be 1-d arrays of equal length")
        if support.size == 0:
            raise ValueError("step distribution needs at least one atom")
        if not np.all(np.isfinite(support)):
            raise ValueError("support must be finite")
        if np.any(np.diff(support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(np.diff(cum) < 0) or cum[0] < 0:
            raise ValueError("cum_probs must be nondecreasing and nonnegative")
        if abs(cum[-1] - 1.0) > CUM_TOL:
            raise ValueError(f"cum_probs must end at 1 (got {cum[-1]!r})")
        cum = cum.copy()
        cum[-1] = 1.0
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum_probs", cum)
        object.__setattr__(self, "_masses", np.diff(cum, prepend=0.0))

    # -- construction -------------------------------------------------

    @classmethod
    def from_values(cls, values, weights=None) -> "StepDistribution":
        """Build the distribution of a finite set of (optionally weighted) points.

        Ties are merged exactly. With no weights this is the empirical CDF.
        """
        vals = np.asarray(values, dtype=np.float64).ravel()
        if vals.size == 0:
            raise ValueError("empty sample")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if weights is None:
            support, counts = np.unique(vals, return_counts=True)
            cum = np.cumsum(counts) / vals.size
        else:
            w = np.asarray(weights, dtype=np.float64).ravel()
            if w.shape != vals.shape:
                raise ValueError("weights must match values")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and nonnegative")
            total = w.sum()
            if total <= 0:
                raise ValueError("weights must have positive total mass")
            support, inverse = np.unique(vals, return_inverse=True)
            mass = np.zeros(support.size)
            np.add.at(mass, inverse, w)
            keep = mass > 0
            support, mass = support[keep], mass[keep]
            cum = np.cumsum(mass) / total
        return cls(support, cum)

    # -- evaluation ----------------------------------------------------

    def cdf(self, x):
        """Right-continuous evaluation P{X <= x}; accepts scalars or arrays."""
        idx = np.searchsorted(self.support, x, side="right")
        padded = np.concatenate(([0.0], self.cum_probs))
        out = padded[idx]
        return float(out) if np.isscalar(x) else out

    def cdf_left(self, x):
        """Left limit P{X < x}; accepts scalars or arrays."""
        idx = np.searchsorted(self.support, x, side="left")
        padded = np.concatenate(([0.0], self.cum_probs))
        out = padded[idx]
        return float(out) if np.isscalar(x) else out

    def quantile(self, alpha: float) -> float:
        """Generalized inverse inf{x : F(x) >= alpha}.

        Level 0 has no finite witness and returns -inf; level 1 is attained
        at the maximum support point of a finite step function.
        """
        alpha = check_level(alpha)
        if alpha == 0.0:
            return -math.inf
        idx = int(np.searchsorted(self.cum_probs, alpha, side="left"))
        return float(self.support[min(idx, self.support.size - 1)])

    @property
    def masses(self) -> np.ndarray:
        """Point masses, aligned with ``support``."""
        return self._masses

    def mean(self) -> float:
        return float(self.support @ self._masses)

    def __len__(self) -> int:
        return int(self.support.size)

    # -- serialization --------------------------------------------------

    def to_csv(self, path) -> None:
        """Write the two-column (support, cum_prob) form, full float precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["support", "cum_prob"])
            for x, c in zip(self.support, self.cum_probs):
                writer.writerow([repr(float(x)), repr(float(c))])

    @classmethod
    def from_csv(cls, path) -> "StepDistribution":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["support", "cum_prob"]:
                raise ValueError(f"expected header ['support', 'cum_prob'], got {header}")
            rows = [(float(a), float(b)) for a, b in reader]
        if not rows:
            raise ValueError("empty step-distribution file")
        support, cum = zip(*rows)
        return cls(np.array(support), np.array(cum))


def edf(sample) -> StepDistribution:
    """Empirical CDF of a univariate sample (ties merged, mass i/n at order statistics)."""
    arr = as_sample(sample)
    if arr.shape[1] != 1:
        raise ValueError("edf expects a univariate sample")
    return StepDistribution.from_values(arr[:, 0])


def quantile(dist: StepDistribution, alpha: float) -> float:
    """Functional form of :meth:`StepDistribution.quantile`."""
    return dist.quantile(alpha)


def critical_value(dist: StepDistribution, alpha: float) -> float:
    """Quantile with unbounded sentinels at both ends.

    Interval endpoints treat level 0 as -inf and level 1 as +inf, so a
    (0, 0) two-sided request yields the trivial full-line interval. Interior
    levels defer to the generalized inverse.
    """
    alpha = check_level(alpha)
    if alpha == 0.0:
        return -math.inf
    if alpha == 1.0:
        return math.inf
    return dist.quantile(alpha)


def edf_quantile(sorted_values: np.ndarray, alpha):
    """Generalized-inverse quantile(s) of the edf of presorted equal-weight values.

    Hot-path companion to :meth:`StepDistribution.quantile`: the edf levels
    are the correctly rounded floats k/m, so comparisons against a float
    alpha match the step representation bit for bit. ``alpha`` may be a
    scalar or an array; every entry must lie in (0, 1]. Sentinels for the
    open endpoints are the caller's business.
    """
    values = np.asarray(sorted_values, dtype=np.float64)
    m = values.shape[0]
    if m == 0:
        raise ValueError("sorted_values must be nonempty")
    arr = np.asarray(alpha, dtype=np.float64)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    levels = np.arange(1, m + 1, dtype=np.float64) / m
    idx = np.minimum(np.searchsorted(levels, arr, side="left"), m - 1)
    out = values[idx]
    return float(out) if np.isscalar(alpha) or arr.ndim == 0 else out


def _one_sided_sup(g: StepDistribution, f: StepDistribution) -> float:
    grid = np.union1d(g.support, f.support)
    at = np.max(g.cdf(grid) - f.cdf(grid))
    left = np.max(g.cdf_left(grid) - f.cdf_left(grid))
    # Both CDFs vanish below every atom and equal 1 above, so 0 is always approached.
    return float(max(0.0, at, left))


def sup_diff(g: StepDistribution, f: StepDistribution) -> float:
    """Exact sup over x of G(x) - F(x); always >= 0 because both tails agree."""
    return _one_sided_sup(g, f)


def kolmogorov_distance(g: StepDistribution, f: StepDistribution) -> float:
    """Exact sup over x of |G(x) - F(x)|."""
    return max(_one_sided_sup(g, f), _one_sided_sup(f, g))


def dkw_bound(epsilon: float, k_n: int) -> float:
    """Deviation bound (1/epsilon) * sqrt(2*pi / k_n) for block-count k_n.

    k_n is the number of disjoint blocks of the subsample size that fit in the
    sample (floor(n/b)). The bound exceeds 1 for small k_n, in which case it
    is vacuous but still valid; callers decide whether to flag that.
    """
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    k_n = int(k_n)
    if k_n < 1:
        raise ValueError(f"k_n must be a positive integer, got {k_n}")
    return (1.0 / epsilon) * math.sqrt(2.0 * math.pi / k_n)
