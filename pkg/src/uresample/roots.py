"""Root statistics: the quantities whose sampling laws get resampled.

A "root" here is a real-valued function of a sample and (possibly) unknown
population quantities: centered means, studentized maxima, a constrained
quadratic-form statistic, Kolmogorov-Smirnov distances, and U-statistic
roots. Each root comes in two forms:

* a plain function of one sample, for spec-level use and for oracles, and
* an evaluator object with a vectorized ``batch`` method over a stack of
  samples, which is what the subsampling/bootstrap engines call. Scalar and
  batch paths are equivalent (the test suite pins them against each other).

Scalar evaluation raises :class:`DegenerateSampleError` when a studentizer
is zero; batch evaluation returns NaN for such rows and lets the engine's
drop policy decide.

Scale factors follow the convention tau_m = m ** tau_exponent with the
default exponent 0.5, where m is the size of the sample actually handed to
the root (so the same evaluator serves full samples and subsamples).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ._indices import philox, random_subsets
from .distcore import StepDistribution, as_sample

__all__ = [
    "DegenerateSampleError",
    "OracleParams",
    "Kernel",
    "RootSpec",
    "UStatResult",
    "z_vector",
    "max_studentized_mean_root",
    "general_f_root",
    "constrained_mean_root",
    "moment_max_stat",
    "omega_tilde",
    "aqlr_value",
    "aqlr_value_batch",
    "aqlr_root",
    "ks_root",
    "u_statistic",
    "u_root",
    "h_prime",
    "symmetrize",
    "g_and_sigma_h",
    "variance_kernel",
    "product_kernel",
    "MeanRoot",
    "StudentizedMeanRoot",
    "MaxStudentizedMeanRoot",
    "GeneralFRoot",
    "AqlrRoot",
    "KsRoot",
    "UStatRoot",
]

DEFAULT_TAU_EXPONENT = 0.5

#: Enumerating all subsets is capped here; beyond it u_statistic goes incomplete.
U_STAT_EXACT_CAP = 2_000_000

#: Default number of random subsets for the incomplete U-statistic.
U_STAT_DRAWS = 100_000

#: Largest coordinate count the quadratic-form statistic will enumerate (2^k subsets).
AQLR_MAX_K = 12


class DegenerateSampleError(ValueError):
    """A studentizer or correlation matrix is degenerate on this sample."""


@dataclass(frozen=True)
class OracleParams:
    """Population quantities a root may need.

    ``mu`` is the mean vector (or scalar mean), ``theta`` a scalar parameter
    for scalar roots, ``cdf`` a reference CDF (callable or StepDistribution)
    for distribution-distance roots. ``tau_exponent`` sets the growth of the
    scale factor tau_m = m ** tau_exponent.
    """

    mu: object | None = None
    theta: float | None = None
    cdf: object | None = None
    tau_exponent: float = DEFAULT_TAU_EXPONENT


ROOT_KINDS = (
    "max-studentized-mean",
    "general-f",
    "constrained-mean",
    "moment-max-stat",
    "aqlr-stat",
    "ks",
    "u-stat",
)


@dataclass(frozen=True)
class RootSpec:
    """Declarative description of a root, used by configs and presets."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ROOT_KINDS:
            raise ValueError(f"unknown root kind {self.kind!r}; expected one of {ROOT_KINDS}")


def _tau(m: int, tau_exponent: float) -> float:
    return float(m) ** tau_exponent


def _mean_and_sd(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and divisor-n standard deviations of an (n, k) matrix."""
    mean = data.mean(axis=0)
    sd = np.sqrt(np.maximum((data * data).mean(axis=0) - mean * mean, 0.0))
    return mean, sd


def _batch_mean_and_sd(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row column means / divisor-m SDs of a (B, m, k) stack."""
    mean = stack.mean(axis=1)
    sd = np.sqrt(np.maximum((stack * stack).mean(axis=1) - mean * mean, 0.0))
    return mean, sd


def _as_stack(stack: np.ndarray) -> np.ndarray:
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"batch input must be (B, m) or (B, m, k), got shape {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# studentized mean roots


def z_vector(sample, mu) -> np.ndarray:
    """Vector of per-coordinate studentized centered means.

    Component j is tau_n * (mean_j - mu_j) / S_j with the divisor-n standard
    deviation S_j. Raises DegenerateSampleError when any S_j vanishes.
    """
    data = as_sample(sample)
    n, k = data.shape
    mu = np.broadcast_to(np.asarray(mu, dtype=np.float64), (k,))
    mean, sd = _mean_and_sd(data)
    bad = np.flatnonzero(sd == 0.0)
    if bad.size:
        raise DegenerateSampleError(f"degenerate coordinate {bad[0]}: zero variance")
    return math.sqrt(n) * (mean - mu) / sd


def max_studentized_mean_root(sample, mu) -> float:
    """Maximum over coordinates of the studentized centered means."""
    return float(np.max(z_vector(sample, mu)))


def moment_max_stat(sample) -> float:
    """Uncentered max studentized mean, the one-sided moment test statistic."""
    return max_studentized_mean_root(sample, 0.0)


def general_f_root(sample, mu, f: Callable[[np.ndarray, np.ndarray], float]) -> float:
    """f applied to the studentized mean vector and the sample correlation matrix."""
    data = as_sample(sample)
    z = z_vector(data, mu)
    return float(f(z, _correlation(data)))


def _correlation(data: np.ndarray) -> np.ndarray:
    mean, sd = _mean_and_sd(data)
    if np.any(sd == 0.0):
        raise DegenerateSampleError("degenerate coordinate: zero variance")
    cov = (data.T @ data) / data.shape[0] - np.outer(mean, mean)
    return cov / np.outer(sd, sd)


def constrained_mean_root(sample, mu) -> float:
    """Scaled distance from the nonnegative-part sample mean to mu (mu >= 0).

    The parameter space is the nonnegative half-line, hence the clamp on the
    estimate and the validation on mu. Plug-in recentering, which may use a
    negative estimated center, goes through :class:`MeanRoot` directly.
    """
    mu = float(mu)
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    data = as_sample(sample, k=1)
    n = data.shape[0]
    return math.sqrt(n) * (max(float(data.mean()), 0.0) - mu)


# ---------------------------------------------------------------------------
# constrained quadratic-form statistic


def omega_tilde(omega_hat, eps: float) -> np.ndarray:
    """Regularized correlation matrix: max(eps - det, 0) * I + omega_hat."""
    omega = np.asarray(omega_hat, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ValueError("omega_hat must be square")
    eps = float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    bump = max(eps - float(np.linalg.det(omega)), 0.0)
    return omega + bump * np.eye(omega.shape[0])


def aqlr_value(z, omega) -> float:
    """Minimum of (z - t)' omega^{-1} (z - t) over the nonpositive orthant.

    Solved exactly by enumerating active sets: for each subset A of
    coordinates pinned at zero, the partial minimizer over the free
    coordinates has value z_A' inv(omega_AA) z_A, and the candidate is
    admissible when the implied free coordinates are nonpositive. Every
    admissible candidate is a feasible point, and the optimum is among
    them, so the minimum over admissible candidates is exact.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    k = z.size
    if k > AQLR_MAX_K:
        raise ValueError(f"active-set enumeration supports k <= {AQLR_MAX_K}, got {k}")
    out = aqlr_value_batch(z[None, :], np.asarray(omega, dtype=np.float64)[None, :, :])
    val = float(out[0])
    if math.isnan(val):
        raise DegenerateSampleError("singular or non-finite omega in quadratic-form statistic")
    return val


def aqlr_value_batch(z: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Vectorized :func:`aqlr_value` over stacks z (B, k), omega (B, k, k).

    Rows with non-finite entries come back NaN.
    """
    z = np.asarray(z, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    B, k = z.shape
    if omega.shape != (B, k, k):
        raise ValueError(f"omega stack must be {(B, k, k)}, got {omega.shape}")
    if k > AQLR_MAX_K:
        raise ValueError(f"active-set enumeration supports k <= {AQLR_MAX_K}, got {k}")

    ok = np.isfinite(z).all(axis=1) & np.isfinite(omega).all(axis=(1, 2))
    z_safe = np.where(ok[:, None], z, 0.0)
    omega_safe = np.where(ok[:, None, None], omega, np.eye(k))

    q = np.linalg.inv(omega_safe)  # feasibility checks need inv(omega) blocks
    best = np.full(B, np.inf)
    idx = np.arange(k)
    ftol = 1e-9
    for mask in range(1 << k):
        active = idx[[(mask >> j) & 1 == 1 for j in range(k)]]
        free = idx[[(mask >> j) & 1 == 0 for j in range(k)]]
        if active.size == 0:
            feasible = (z_safe <= ftol).all(axis=1) if k else np.ones(B, bool)
            best = np.where(feasible, np.minimum(best, 0.0), best)
            continue
        om_aa = omega_safe[:, active[:, None], active[None, :]]
        z_a = z_safe[:, active]
        try:
            w = np.linalg.solve(om_aa, z_a[..., None])[..., 0]
        except np.linalg.LinAlgError:
            continue
        val = np.einsum("bi,bi->b", z_a, w)
        if free.size:
            q_ff = q[:, free[:, None], free[None, :]]
            q_fa = q[:, free[:, None], active[None, :]]
            rhs = np.einsum("bij,bj->bi", q_fa, z_a)
            u_f = -np.linalg.solve(q_ff, rhs[..., None])[..., 0]
            t_f = z_safe[:, free] - u_f
            feasible = (t_f <= ftol).all(axis=1)
        else:
            feasible = np.ones(B, bool)
        best = np.where(feasible & (val < best), val, best)
    best = np.maximum(best, 0.0)  # active-set values are >= 0 up to roundoff
    return np.where(ok & np.isfinite(best), best, np.nan)


def aqlr_root(sample, mu, eps: float) -> float:
    """Constrained quadratic-form root at center mu with regularization eps.

    With mu = 0 this is the test statistic itself.
    """
    data = as_sample(sample)
    z = z_vector(data, mu)
    return aqlr_value(z, omega_tilde(_correlation(data), eps))


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov root


def _reference_cdfs(reference) -> tuple[Callable, Callable]:
    """Normalize a reference distribution to (cdf, left-limit cdf) callables."""
    if isinstance(reference, StepDistribution):
        return reference.cdf, reference.cdf_left
    cdf = getattr(reference, "cdf", None)
    if cdf is not None and not callable(reference):
        left = getattr(reference, "cdf_left", cdf)
        return cdf, left
    if callable(reference):
        return reference, reference  # continuous: left limits coincide
    raise TypeError("reference must be a StepDistribution, an object with .cdf, or a callable")


def ks_sup_distance(sorted_values: np.ndarray, reference) -> float:
    """sup_x |EDF(x) - G(x)| for a presorted 1-d value array against G.

    Exact for step references as well: between order statistics the EDF is
    flat, so the sup over each interval is attained at the stored values and
    left limits below.
    """
    cdf, cdf_left = _reference_cdfs(reference)
    n = sorted_values.size
    gr = np.asarray(cdf(sorted_values), dtype=np.float64)
    gl = np.asarray(cdf_left(sorted_values), dtype=np.float64)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(hi - gr), np.max(gl - lo)))


def ks_root(sample, reference, tau_exponent: float = DEFAULT_TAU_EXPONENT) -> float:
    """Scaled sup distance between the sample EDF and a reference CDF."""
    data = as_sample(sample, k=1)
    d = ks_sup_distance(np.sort(data[:, 0]), reference)
    return _tau(data.shape[0], tau_exponent) * d


# ---------------------------------------------------------------------------
# U-statistics


@dataclass(frozen=True)
class Kernel:
    """A kernel of fixed degree for U-statistics.

    ``fn`` takes ``degree`` array arguments and must be an elementwise
    (broadcasting) function of them. ``u_batch``, when present, computes the
    complete U-statistic row-wise on a (B, m) value matrix in closed form;
    engines use it as a fast path. Non-symmetric kernels must be run through
    :func:`symmetrize` before use in :func:`u_statistic`.
    """

    degree: int
    fn: Callable
    name: str = ""
    symmetric: bool = True
    u_batch: Callable | None = None

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("kernel degree must be >= 1")


def variance_kernel() -> Kernel:
    """Degree-2 kernel h(x, y) = (x - y)^2 / 2 whose U-statistic is the sample variance."""

    def fn(x, y):
        d = np.subtract(x, y)
        return 0.5 * d * d

    def u_batch(values: np.ndarray) -> np.ndarray:
        m = values.shape[1]
        mean = values.mean(axis=1)
        msq = (values * values).mean(axis=1)
        return (msq - mean * mean) * (m / (m - 1.0))

    return Kernel(degree=2, fn=fn, name="variance", u_batch=u_batch)


def product_kernel() -> Kernel:
    """Degree-2 kernel h(x, y) = x * y (population parameter: second moment of the mean pair)."""
    return Kernel(degree=2, fn=lambda x, y: np.multiply(x, y), name="product")


@dataclass(frozen=True)
class UStatResult:
    """Value of a U-statistic plus how it was computed.

    ``exact`` is False for the incomplete (randomly subsampled) estimate;
    ``n_terms`` is the number of kernel evaluations averaged either way.
    """

    value: float
    exact: bool
    n_terms: int


def _exact_u_value(values: np.ndarray, kernel: Kernel) -> float:
    n = values.size
    m = kernel.degree
    cols = np.array(list(itertools.combinations(range(n), m)), dtype=np.intp)
    terms = np.asarray(kernel.fn(*(values[cols[:, j]] for j in range(m))), dtype=np.float64)
    return math.fsum(terms.tolist()) / cols.shape[0]


def u_statistic(
    sample,
    kernel: Kernel,
    *,
    term_cap: int = U_STAT_EXACT_CAP,
    draws: int = U_STAT_DRAWS,
    seed: int = 0,
) -> UStatResult:
    """Average of a symmetric kernel over m-subsets of a univariate sample.

    Enumerates all C(n, m) subsets when that count is within ``term_cap``
    (summed with math.fsum, so the exact path is reproducible to the last
    bit); otherwise averages over ``draws`` uniformly random subsets and
    flags the result as not exact.
    """
    data = as_sample(sample, k=1)
    if not kernel.symmetric:
        raise ValueError("kernel must be symmetric; wrap it with symmetrize() first")
    values = data[:, 0]
    n = values.size
    m = kernel.degree
    if m > n:
        raise ValueError(f"kernel degree {m} exceeds sample size {n}")
    n_subsets = math.comb(n, m)
    if n_subsets <= term_cap:
        return UStatResult(value=_exact_u_value(values, kernel), exact=True, n_terms=n_subsets)
    idx = random_subsets(philox(seed), int(draws), n, m)
    terms = np.asarray(kernel.fn(*(values[idx[:, j]] for j in range(m))), dtype=np.float64)
    return UStatResult(value=float(terms.mean()), exact=False, n_terms=int(draws))


def u_root(
    sample,
    kernel: Kernel,
    theta: float,
    tau_exponent: float = DEFAULT_TAU_EXPONENT,
    **u_kwargs,
) -> float:
    """Scaled centered U-statistic root tau_n * (U_n - theta)."""
    data = as_sample(sample, k=1)
    stat = u_statistic(data, kernel, **u_kwargs)
    return _tau(data.shape[0], tau_exponent) * (stat.value - theta)


def h_prime(kernel: Kernel) -> Kernel:
    """Degree-2m companion kernel used by bootstrap moment conditions.

    h'(x_1..x_2m) = h(x_1..x_m) h(x_1, x_{m+2}..x_{2m}) - h(x_1..x_m) h(x_{m+1}..x_{2m}).
    The result is not symmetric; symmetrize it before computing U-statistics.
    """
    m = kernel.degree
    h = kernel.fn

    def fn(*args):
        if len(args) != 2 * m:
            raise ValueError(f"expected {2 * m} arguments, got {len(args)}")
        first = h(*args[:m])
        overlap = h(args[0], *args[m + 1:]) if m > 1 else h(args[0])
        second = h(*args[m:])
        return first * overlap - first * second

    return Kernel(degree=2 * m, fn=fn, name=f"{kernel.name or 'h'}-companion", symmetric=False)


def symmetrize(kernel: Kernel, *, exact_max_degree: int = 4, n_orders: int = 48, seed: int = 0) -> Kernel:
    """Average a kernel over argument orders so it becomes symmetric.

    Exact (all d! orders) through ``exact_max_degree``; beyond that, a fixed
    seeded draw of ``n_orders`` permutations is averaged instead.
    """
    if kernel.symmetric:
        return kernel
    d = kernel.degree
    if d <= exact_max_degree:
        perms = list(itertools.permutations(range(d)))
    else:
        rng = philox(seed)
        perms = [tuple(rng.permutation(d)) for _ in range(n_orders)]
    base = kernel.fn

    def fn(*args):
        if len(args) != d:
            raise ValueError(f"expected {d} arguments, got {len(args)}")
        acc = None
        for p in perms:
            term = base(*(args[j] for j in p))
            acc = term if acc is None else acc + term
        return acc / len(perms)

    return Kernel(degree=d, fn=fn, name=f"sym({kernel.name or 'h'})", symmetric=True)


def g_and_sigma_h(
    kernel: Kernel,
    sampler: Callable[[int, np.random.Generator], np.ndarray],
    theta: float | None = None,
    *,
    n_mc: int = 100_000,
    seed: int = 0,
) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
    """Monte Carlo projection g(x) = E h(x, Y_2..Y_m) - theta and scale sigma_h.

    ``sampler(n, rng)`` must return n i.i.d. draws (1-d). theta defaults to a
    Monte Carlo estimate of E h(X_1..X_m). sigma_h is m * sd(g(X)), the
    asymptotic standard deviation of the scaled centered U-statistic. A
    near-zero sigma_h means the kernel is degenerate at this distribution
    and root-scaled resampling of it is untrustworthy.
    """
    m = kernel.degree
    rng = philox(seed)
    companions = [np.asarray(sampler(n_mc, rng), dtype=np.float64).ravel() for _ in range(m - 1)]
    if theta is None:
        lead = np.asarray(sampler(n_mc, rng), dtype=np.float64).ravel()
        theta = float(np.mean(kernel.fn(lead, *companions))) if m > 1 else float(np.mean(kernel.fn(lead)))
    theta = float(theta)

    def g(x):
        x = np.asarray(x, dtype=np.float64)
        flat = x.ravel()[:, None]
        if m == 1:
            vals = np.asarray(kernel.fn(flat[:, 0]), dtype=np.float64) - theta
            return vals.reshape(x.shape) if x.ndim else float(vals[0])
        # chunk so the broadcast never exceeds ~1e7 kernel evaluations at once
        step = max(1, int(10_000_000 // n_mc))
        pieces = [
            np.mean(kernel.fn(flat[i:i + step], *(c[None, :] for c in companions)), axis=1)
            for i in range(0, flat.shape[0], step)
        ]
        vals = np.concatenate(pieces) - theta
        return vals.reshape(x.shape) if x.ndim else float(vals[0])

    probe = np.asarray(sampler(n_mc, rng), dtype=np.float64).ravel()
    gx = np.asarray(g(probe), dtype=np.float64)
    sigma_h = m * float(np.sqrt(max(np.mean(gx * gx) - np.mean(gx) ** 2, 0.0)))
    return g, sigma_h


# ---------------------------------------------------------------------------
# evaluator objects (scalar + batch)


@dataclass(frozen=True)
class MeanRoot:
    """tau_m * (mean - center), optionally clamping the mean at zero first."""

    center: float
    clamp_nonneg: bool = False
    tau_exponent: float = DEFAULT_TAU_EXPONENT

    def __call__(self, data) -> float:
        data = as_sample(data, k=1)
        mean = float(data.mean())
        if self.clamp_nonneg:
            mean = max(mean, 0.0)
        return _tau(data.shape[0], self.tau_exponent) * (mean - self.center)

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        mean = stack[:, :, 0].mean(axis=1)
        if self.clamp_nonneg:
            mean = np.maximum(mean, 0.0)
        return _tau(stack.shape[1], self.tau_exponent) * (mean - self.center)


@dataclass(frozen=True)
class StudentizedMeanRoot:
    """tau_m * (mean - center) / S with the divisor-m standard deviation."""

    center: float
    tau_exponent: float = DEFAULT_TAU_EXPONENT

    def __call__(self, data) -> float:
        data = as_sample(data, k=1)
        mean, sd = _mean_and_sd(data)
        if sd[0] == 0.0:
            raise DegenerateSampleError("degenerate coordinate 0: zero variance")
        return _tau(data.shape[0], self.tau_exponent) * (mean[0] - self.center) / sd[0]

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        mean, sd = _batch_mean_and_sd(stack)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = _tau(stack.shape[1], self.tau_exponent) * (mean[:, 0] - self.center) / sd[:, 0]
        return np.where(sd[:, 0] > 0.0, out, np.nan)


@dataclass(frozen=True)
class MaxStudentizedMeanRoot:
    """max_j tau_m * (mean_j - center_j) / S_j; center 0 gives the moment statistic."""

    center: np.ndarray | float = 0.0
    tau_exponent: float = DEFAULT_TAU_EXPONENT

    def __call__(self, data) -> float:
        data = as_sample(data)
        return float(np.max(self._z(data.mean(axis=0), _mean_and_sd(data)[1], data.shape)))

    def _z(self, mean, sd, shape):
        center = np.broadcast_to(np.asarray(self.center, dtype=np.float64), (shape[1],))
        if np.any(sd == 0.0):
            raise DegenerateSampleError("degenerate coordinate: zero variance")
        return _tau(shape[0], self.tau_exponent) * (mean - center) / sd

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        B, m, k = stack.shape
        center = np.broadcast_to(np.asarray(self.center, dtype=np.float64), (k,))
        mean, sd = _batch_mean_and_sd(stack)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = _tau(m, self.tau_exponent) * (mean - center[None, :]) / sd
        out = np.max(z, axis=1)
        return np.where((sd > 0.0).all(axis=1), out, np.nan)


@dataclass(frozen=True)
class GeneralFRoot:
    """f(z, omega_hat) for a user function f; batch evaluation loops."""

    center: np.ndarray | float
    f: Callable[[np.ndarray, np.ndarray], float]
    tau_exponent: float = DEFAULT_TAU_EXPONENT

    def __call__(self, data) -> float:
        data = as_sample(data)
        center = np.broadcast_to(np.asarray(self.center, dtype=np.float64), (data.shape[1],))
        mean, sd = _mean_and_sd(data)
        if np.any(sd == 0.0):
            raise DegenerateSampleError("degenerate coordinate: zero variance")
        z = _tau(data.shape[0], self.tau_exponent) * (mean - center) / sd
        return float(self.f(z, _correlation(data)))

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        out = np.empty(stack.shape[0])
        for i in range(stack.shape[0]):
            try:
                out[i] = self(stack[i])
            except DegenerateSampleError:
                out[i] = np.nan
        return out


@dataclass(frozen=True)
class AqlrRoot:
    """Constrained quadratic-form root with per-sample regularized correlation."""

    center: np.ndarray | float
    eps: float

    def __call__(self, data) -> float:
        return aqlr_root(data, self.center, self.eps)

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        B, m, k = stack.shape
        center = np.broadcast_to(np.asarray(self.center, dtype=np.float64), (k,))
        mean, sd = _batch_mean_and_sd(stack)
        cross = np.einsum("bmi,bmj->bij", stack, stack) / m
        cov = cross - np.einsum("bi,bj->bij", mean, mean)
        denom = np.einsum("bi,bj->bij", sd, sd)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = cov / denom
            z = math.sqrt(m) * (mean - center[None, :]) / sd
        det = np.linalg.det(np.where(np.isfinite(corr), corr, 0.0))
        bump = np.maximum(self.eps - det, 0.0)
        omega = corr + bump[:, None, None] * np.eye(k)[None, :, :]
        vals = aqlr_value_batch(np.where(np.isfinite(z), z, np.nan), omega)
        ok = (sd > 0.0).all(axis=1)
        return np.where(ok, vals, np.nan)


@dataclass(frozen=True)
class KsRoot:
    """Scaled sup distance to a fixed reference CDF."""

    reference: object
    tau_exponent: float = DEFAULT_TAU_EXPONENT

    def __call__(self, data) -> float:
        return ks_root(data, self.reference, self.tau_exponent)

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        if stack.shape[2] != 1:
            raise ValueError("KS root expects univariate samples")
        values = np.sort(stack[:, :, 0], axis=1)
        cdf, cdf_left = _reference_cdfs(self.reference)
        B, m = values.shape
        gr = np.asarray(cdf(values), dtype=np.float64)
        gl = np.asarray(cdf_left(values), dtype=np.float64)
        hi = np.arange(1, m + 1) / m
        lo = np.arange(0, m) / m
        d = np.maximum((hi[None, :] - gr).max(axis=1), (gl - lo[None, :]).max(axis=1))
        return _tau(m, self.tau_exponent) * d


@dataclass(frozen=True)
class UStatRoot:
    """tau_m * (U_m - center) for a symmetric kernel.

    Batch evaluation prefers the kernel's closed-form ``u_batch``; degree-2
    kernels without one are enumerated over all pairs, vectorized across the
    stack; anything else falls back to a per-row loop.
    """

    kernel: Kernel
    center: float
    tau_exponent: float = DEFAULT_TAU_EXPONENT

    def __call__(self, data) -> float:
        return u_root(data, self.kernel, self.center, self.tau_exponent)

    def batch(self, stack) -> np.ndarray:
        stack = _as_stack(stack)
        if stack.shape[2] != 1:
            raise ValueError("U-statistic root expects univariate samples")
        values = stack[:, :, 0]
        B, m = values.shape
        tau = _tau(m, self.tau_exponent)
        if self.kernel.u_batch is not None:
            u = np.asarray(self.kernel.u_batch(values), dtype=np.float64)
        elif self.kernel.degree == 2 and math.comb(m, 2) * B <= 50_000_000:
            ii, jj = np.triu_indices(m, k=1)
            u = np.asarray(self.kernel.fn(values[:, ii], values[:, jj]), dtype=np.float64).mean(axis=1)
        else:
            u = np.array([
                u_statistic(values[i], self.kernel).value for i in range(B)
            ])
        return tau * (u - self.center)
