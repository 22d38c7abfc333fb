"""Data-generating families with closed-form oracle quantities.

Each family is a deterministic sampler (seeded through the counter-based
stream helpers) plus the truth the harness needs to score methods against:
means and covariances, univariate CDFs with left limits, central moments
for kernel-based targets, and exact root laws where the support is finite.
Families whose parameters move with the sample size (the drifting-mean
family, the near-one Bernoulli boundary) expose n-dependent accessors,
since those sequences are exactly the stress cases the harness sweeps.

Every family here has uniformly bounded fourth moments after
standardization over the parameter ranges the presets sweep (bounded
support or Gaussian tails), which is the integrability the uniform
coverage guarantees ask of a family grid; the check is analytic, not
runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._indices import derive_seed, philox
from .distcore import StepDistribution

__all__ = [
    "Family",
    "Bernoulli",
    "TwoPoint",
    "Normal",
    "NormalDrift",
    "ScaledMixture",
    "Uniform",
    "standardized_bernoulli",
    "boundary_theta",
    "sample_from",
    "oracle_root_distribution",
    "make_family",
    "FAMILY_NAMES",
]

_MC_CHUNK = 4_000_000


class Family:
    """Base interface: seeded sampling plus oracle accessors.

    Accessors take an optional ``n`` so families whose truth moves with the
    sample size can answer; fixed families ignore it.
    """

    kind = "family"
    k = 1

    def sample(self, n: int, seed: int) -> np.ndarray:
        raise NotImplementedError

    def mean(self, n: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def cov(self, n: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def sd(self, n: int | None = None) -> np.ndarray:
        return np.sqrt(np.diag(self.cov(n)))

    def corr(self, n: int | None = None) -> np.ndarray:
        cov = self.cov(n)
        s = np.sqrt(np.diag(cov))
        return cov / np.outer(s, s)

    def cdf(self, x):
        raise NotImplementedError(f"{self.kind}: no univariate cdf")

    def cdf_left(self, x):
        # continuous families share the right-limit cdf; atomic ones override
        return self.cdf(x)

    def central_moment(self, r: int) -> float:
        raise NotImplementedError(f"{self.kind}: central moments not available")

    def variance_kernel_theta(self) -> float:
        """Target of the pairwise half-squared-difference kernel: the variance."""
        return self.central_moment(2)

    def variance_kernel_sigma(self) -> float:
        """Projection scale of that kernel: sd((X - mu)^2), times kernel degree / 2."""
        m2 = self.central_moment(2)
        m4 = self.central_moment(4)
        return math.sqrt(max(m4 - m2 * m2, 0.0))

    def two_point_support(self) -> tuple[float, float, float] | None:
        """(lo, hi, P{X = hi}) when the support has exactly two atoms, else None."""
        return None

    def describe(self) -> dict:
        raise NotImplementedError


def _check_prob(p: float, name: str = "p") -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class Bernoulli(Family):
    """Coin flips in {0, 1} with success probability theta."""

    theta: float
    kind = "bernoulli"

    def __post_init__(self):
        _check_prob(self.theta, "theta")

    def sample(self, n, seed):
        return (philox(seed).random(n) < self.theta).astype(np.float64).reshape(n, 1)

    def mean(self, n=None):
        return np.array([self.theta])

    def cov(self, n=None):
        return np.array([[self.theta * (1.0 - self.theta)]])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < 0.0, 0.0, np.where(x < 1.0, 1.0 - self.theta, 1.0))

    def cdf_left(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x <= 0.0, 0.0, np.where(x <= 1.0, 1.0 - self.theta, 1.0))

    def central_moment(self, r):
        q = 1.0 - self.theta
        return q * (-self.theta) ** r + self.theta * q ** r

    def two_point_support(self):
        return (0.0, 1.0, self.theta)

    def describe(self):
        return {"family": self.kind, "theta": self.theta}


@dataclass(frozen=True)
class TwoPoint(Family):
    """Two atoms: P{X = hi} = p, P{X = lo} = 1 - p."""

    lo: float
    hi: float
    p: float
    kind = "two-point"

    def __post_init__(self):
        _check_prob(self.p)
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got {self.lo}, {self.hi}")

    def sample(self, n, seed):
        hits = philox(seed).random(n) < self.p
        return np.where(hits, self.hi, self.lo).reshape(n, 1)

    def mean(self, n=None):
        return np.array([self.lo + (self.hi - self.lo) * self.p])

    def cov(self, n=None):
        return np.array([[(self.hi - self.lo) ** 2 * self.p * (1.0 - self.p)]])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < self.lo, 0.0, np.where(x < self.hi, 1.0 - self.p, 1.0))

    def cdf_left(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x <= self.lo, 0.0, np.where(x <= self.hi, 1.0 - self.p, 1.0))

    def central_moment(self, r):
        mu = float(self.mean()[0])
        return (1.0 - self.p) * (self.lo - mu) ** r + self.p * (self.hi - mu) ** r

    def two_point_support(self):
        return (self.lo, self.hi, self.p)

    def describe(self):
        return {"family": self.kind, "lo": self.lo, "hi": self.hi, "p": self.p}


def standardized_bernoulli(p: float) -> TwoPoint:
    """Bernoulli(p) centered and scaled to mean 0, variance 1."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    s = math.sqrt(p * (1.0 - p))
    return TwoPoint(lo=-p / s, hi=(1.0 - p) / s, p=p)


def _equicorrelation(k: int, rho: float) -> np.ndarray:
    if k > 1 and not -1.0 / (k - 1) < rho < 1.0:
        raise ValueError(f"rho={rho} not positive definite for k={k}")
    return (1.0 - rho) * np.eye(k) + rho * np.ones((k, k))


@dataclass(frozen=True)
class Normal(Family):
    """Gaussian vector with common mean/scale pattern and equicorrelation rho."""

    mu: tuple[float, ...] = (0.0,)
    sigma: float = 1.0
    rho: float = 0.0

    kind = "normal"

    def __post_init__(self):
        mu = tuple(float(v) for v in np.atleast_1d(self.mu))
        object.__setattr__(self, "mu", mu)
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        _equicorrelation(len(mu), self.rho)

    @property
    def k(self):
        return len(self.mu)

    def _chol(self):
        return np.linalg.cholesky(self.cov())

    def sample(self, n, seed):
        z = philox(seed).standard_normal((n, self.k))
        return z @ self._chol().T + np.asarray(self.mu)

    def mean(self, n=None):
        return np.asarray(self.mu, dtype=np.float64)

    def cov(self, n=None):
        return self.sigma ** 2 * _equicorrelation(self.k, self.rho)

    def cdf(self, x):
        if self.k != 1:
            raise NotImplementedError("cdf is univariate only")
        return stats.norm.cdf(np.asarray(x, dtype=np.float64), loc=self.mu[0], scale=self.sigma)

    def central_moment(self, r):
        if self.k != 1:
            raise NotImplementedError("central moments are univariate only")
        if r % 2 == 1:
            return 0.0
        return self.sigma ** r * math.prod(range(r - 1, 0, -2))

    def describe(self):
        return {"family": self.kind, "mu": list(self.mu), "sigma": self.sigma, "rho": self.rho}


@dataclass(frozen=True)
class NormalDrift(Family):
    """N(max(h, 0)/sqrt(n), 1): a unit-Gaussian mean drifting toward zero.

    The clamped nonneg mean keeps the drifting truth inside the parameter
    space of the nonnegative-mean model at every n, which is what makes it
    the stress sequence for the constrained-mean root.
    """

    h: float
    kind = "normal-drift"

    def _require_n(self, n):
        if n is None:
            raise ValueError("normal-drift accessors need the sample size n")
        return int(n)

    def drift(self, n: int) -> float:
        return max(self.h, 0.0) / math.sqrt(self._require_n(n))

    def sample(self, n, seed):
        return (philox(seed).standard_normal((n, 1)) + self.drift(n)).reshape(n, 1)

    def mean(self, n=None):
        return np.array([self.drift(n)])

    def cov(self, n=None):
        return np.array([[1.0]])

    def central_moment(self, r):
        return 0.0 if r % 2 == 1 else float(math.prod(range(r - 1, 0, -2)))

    def frozen_at(self, n: int) -> "Normal":
        """The fixed member this family occupies at sample size n.

        Oracle enumeration of the root law at a smaller resample size must
        hold the distribution at its level-n member rather than re-drift.
        """
        return Normal(mu=(self.drift(n),), sigma=1.0)

    def constrained_root_cdf(self, x, n=None):
        """Law of the clamped centered root: max(Z, -max(h,0)), Z standard normal.

        An atom of mass Phi(-h) sits at -h; above it the law is standard
        normal. This is the closed form the Monte Carlo oracle is checked
        against.
        """
        del n  # the law is free of n; the argument mirrors the other accessors
        x = np.asarray(x, dtype=np.float64)
        h = max(self.h, 0.0)
        return np.where(x < -h, 0.0, stats.norm.cdf(x))

    def describe(self):
        return {"family": self.kind, "h": self.h}


@dataclass(frozen=True)
class ScaledMixture(Family):
    """Gaussian scale mixture standardized to unit variance.

    Draws a scale s_j with probability w_j, returns s_j Z / c with
    c = sqrt(sum w_j s_j^2), so the mixture has mean 0 and variance 1
    while keeping heavy shoulders relative to the Gaussian.
    """

    scales: tuple[float, ...]
    weights: tuple[float, ...] | None = None
    kind = "scaled-mixture"

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        if not scales or any(s <= 0.0 for s in scales):
            raise ValueError("scales must be positive and nonempty")
        if self.weights is None:
            weights = tuple(1.0 / len(scales) for _ in scales)
        else:
            weights = tuple(float(w) for w in self.weights)
            if len(weights) != len(scales) or any(w < 0.0 for w in weights):
                raise ValueError("weights must be nonnegative, one per scale")
            total = sum(weights)
            if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
                raise ValueError(f"weights must sum to 1, got {total}")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "weights", weights)

    def _norm(self) -> float:
        return math.sqrt(sum(w * s * s for w, s in zip(self.weights, self.scales)))

    def sample(self, n, seed):
        rng = philox(seed)
        which = rng.choice(len(self.scales), size=n, p=np.asarray(self.weights))
        s = np.asarray(self.scales)[which] / self._norm()
        return (s * rng.standard_normal(n)).reshape(n, 1)

    def mean(self, n=None):
        return np.array([0.0])

    def cov(self, n=None):
        return np.array([[1.0]])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        c = self._norm()
        out = np.zeros_like(x, dtype=np.float64)
        for w, s in zip(self.weights, self.scales):
            out = out + w * stats.norm.cdf(x * c / s)
        return out

    def central_moment(self, r):
        if r % 2 == 1:
            return 0.0
        c = self._norm()
        dfact = math.prod(range(r - 1, 0, -2))
        return dfact * sum(w * s ** r for w, s in zip(self.weights, self.scales)) / c ** r

    def describe(self):
        return {"family": self.kind, "scales": list(self.scales), "weights": list(self.weights)}


@dataclass(frozen=True)
class Uniform(Family):
    """Uniform on [lo, hi]."""

    lo: float = 0.0
    hi: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got {self.lo}, {self.hi}")

    def sample(self, n, seed):
        return (self.lo + (self.hi - self.lo) * philox(seed).random(n)).reshape(n, 1)

    def mean(self, n=None):
        return np.array([(self.lo + self.hi) / 2.0])

    def cov(self, n=None):
        return np.array([[(self.hi - self.lo) ** 2 / 12.0]])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def central_moment(self, r):
        if r % 2 == 1:
            return 0.0
        half = (self.hi - self.lo) / 2.0
        return half ** r / (r + 1)

    def describe(self):
        return {"family": self.kind, "lo": self.lo, "hi": self.hi}


def boundary_theta(delta: float, n: int) -> float:
    """Success probability at which all n draws are ones with probability 1 - delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return (1.0 - delta) ** (1.0 / n)


def sample_from(family: Family, n: int, seed: int) -> np.ndarray:
    """n i.i.d. rows from the family, a pure function of (family, n, seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return family.sample(n, seed)


def oracle_root_distribution(
    family: Family,
    root,
    n: int,
    mode: str = "monte-carlo",
    draws: int = 100_000,
    seed: int = 0,
) -> StepDistribution:
    """Law of a root under the family at sample size n.

    Exact mode needs a two-atom family and a permutation-invariant root:
    the sample with j high atoms stands in for every arrangement, weighted
    by the binomial law of j. Monte Carlo mode evaluates the root on
    ``draws`` fresh samples, chunked to bound memory, each chunk seeded
    from (seed, chunk index).
    """
    if mode == "exact":
        support = family.two_point_support()
        if support is None:
            raise ValueError(f"{family.kind}: exact mode needs a two-atom support")
        lo, hi, p = support
        values = np.empty(n + 1)
        for j in range(n + 1):
            arranged = np.concatenate([np.full(n - j, lo), np.full(j, hi)]).reshape(n, 1)
            values[j] = root(arranged)
        weights = stats.binom.pmf(np.arange(n + 1), n, p)
        return StepDistribution.from_values(values, weights)
    if mode != "monte-carlo":
        raise ValueError(f"mode must be 'exact' or 'monte-carlo', got {mode!r}")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    chunk = max(1, _MC_CHUNK // max(n, 1))
    out = np.empty(draws)
    done = 0
    block = 0
    batch = getattr(root, "batch", None)
    while done < draws:
        take = min(chunk, draws - done)
        flat = family.sample(take * n, derive_seed(seed, block))
        stacks = flat.reshape(take, n, -1)
        if batch is not None:
            out[done:done + take] = batch(stacks)
        else:
            for i in range(take):
                out[done + i] = root(stacks[i])
        done += take
        block += 1
    return StepDistribution.from_values(out[np.isfinite(out)])


FAMILY_NAMES = (
    "bernoulli",
    "two-point",
    "standardized-bernoulli",
    "normal",
    "normal-drift",
    "scaled-mixture",
    "uniform",
)


def make_family(name: str, params: dict) -> Family:
    """Family registry for configs: name plus a parameter map."""
    params = dict(params)
    try:
        if name == "bernoulli":
            return Bernoulli(**params)
        if name == "two-point":
            return TwoPoint(**params)
        if name == "standardized-bernoulli":
            return standardized_bernoulli(**params)
        if name == "normal":
            if "mu" in params and np.ndim(params["mu"]) > 0:
                params["mu"] = tuple(float(v) for v in params["mu"])
            elif "k" in params:
                k = int(params.pop("k"))
                params["mu"] = tuple([float(params.pop("mu", 0.0))] * k)
            elif "mu" in params:
                params["mu"] = (float(params["mu"]),)
            return Normal(**params)
        if name == "normal-drift":
            return NormalDrift(**params)
        if name == "scaled-mixture":
            params["scales"] = tuple(params["scales"])
            if params.get("weights") is not None:
                params["weights"] = tuple(params["weights"])
            return ScaledMixture(**params)
        if name == "uniform":
            return Uniform(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for family {name!r}: {exc}") from None
    raise ValueError(f"unknown family {name!r}; expected one of {FAMILY_NAMES}")
