"""Independent reference implementations used as test oracles.

Everything here is deliberately slow and structurally different from the
library code: exhaustive enumeration, staged grid search, and direct
formula evaluation. Tests compare library output against these rather
than against the library itself.
"""

import itertools
import math

import numpy as np
from scipy import stats

from uresample.distcore import StepDistribution, kolmogorov_distance, sup_diff


def dyadic_step(rng, max_atoms: int = 8, denom_pow: int = 10, span: int = 16) -> StepDistribution:
    """Random step CDF with dyadic atoms and dyadic masses.

    Atom positions are multiples of 1/8 and masses multiples of 2**-denom_pow,
    so cumulative probabilities, their differences, and sums with dyadic alpha
    levels are all exact in binary floating point. That makes zero-tolerance
    inequality checks sound.
    """
    m = int(rng.integers(1, max_atoms + 1))
    pos = rng.choice(np.arange(-span, span + 1), size=m, replace=False)
    support = np.sort(pos) / 8.0
    counts = rng.multinomial(2**denom_pow, np.full(m, 1.0 / m))
    cum = np.cumsum(counts) / float(2**denom_pow)
    return StepDistribution(support, cum)


def quantile_inequality_violations(f: StepDistribution, g: StepDistribution,
                                   alphas) -> int:
    """Count violations of the five deterministic quantile-transfer inequalities.

    With e1 = sup{G - F} and e2 = sup{F - G} (both exact for step CDFs), and
    X ~ F evaluated by exact enumeration:
      (i)   G^{-1}(1 - a2) >= F^{-1}(1 - (a2 + e1))       while a2 + e1 < 1
      (ii)  G^{-1}(a1) <= F^{-1}(a1 + e2)                 while a1 + e2 <= 1
      (iii) P{X <= G^{-1}(1 - a2)} >= 1 - (a2 + e1)
      (iv)  P{X >= G^{-1}(a1)} >= 1 - (a1 + e2)
      (v)   P{G^{-1}(a1) <= X <= G^{-1}(1 - a2)} >= 1 - (a1 + a2 + e)
            with e = 2 * sup|G - F|, for a1 + a2 < 1
    All comparisons are exact; any violation is counted.
    """
    e1 = sup_diff(g, f)
    e2 = sup_diff(f, g)
    e_abs2 = 2.0 * kolmogorov_distance(g, f)
    bad = 0
    for a2 in alphas:
        if a2 + e1 < 1.0 and g.quantile(1.0 - a2) < f.quantile(1.0 - (a2 + e1)):
            bad += 1
        if f.cdf(g.quantile(1.0 - a2)) < 1.0 - (a2 + e1):
            bad += 1
    for a1 in alphas:
        if a1 + e2 <= 1.0 and g.quantile(a1) > f.quantile(a1 + e2):
            bad += 1
        if 1.0 - f.cdf_left(g.quantile(a1)) < 1.0 - (a1 + e2):
            bad += 1
    for a1 in alphas:
        for a2 in alphas:
            if a1 + a2 >= 1.0:
                continue
            lo = g.quantile(a1)
            hi = g.quantile(1.0 - a2)
            cover = f.cdf(hi) - f.cdf_left(lo)
            if cover < 1.0 - (a1 + a2 + e_abs2):
                bad += 1
    return bad


def grid_aqlr(z, omega, stages: int = 5, points: int = 21) -> float:
    """Staged grid-search minimum of (z - t)' omega^{-1} (z - t) over t <= 0.

    The first box provably contains the minimizer: t = 0 is feasible, so the
    optimum value is at most V = z' omega^{-1} z, and the omega-ball of that
    value around z has euclidean radius at most sqrt(lambda_max * V). Each
    stage zooms on the best grid point with enough overlap to keep the true
    minimizer inside the next box.
    """
    z = np.asarray(z, dtype=np.float64).ravel()
    k = z.size
    inv = np.linalg.inv(omega)
    v0 = float(z @ inv @ z)
    lam_max = float(np.linalg.eigvalsh(omega)[-1])
    s = math.sqrt(max(lam_max * v0, 0.0)) + 1e-6
    lo = np.minimum(0.0, z - s)
    hi = np.zeros(k)
    center = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 + 1e-9
    best = v0
    for _ in range(stages):
        axes = [np.linspace(c - h, c + h, points) for c, h in zip(center, half)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.minimum(np.stack([m.ravel() for m in mesh], axis=1), 0.0)
        diff = pts - z[None, :]
        vals = np.einsum("bi,ij,bj->b", diff, inv, diff)
        i = int(np.argmin(vals))
        best = float(vals[i])
        center = pts[i]
        step = 2.0 * half / (points - 1)
        half = 1.5 * step
    return best


def exhaustive_u(values, kernel_fn, degree: int = 2) -> float:
    """Full U-statistic by direct combination enumeration with exact summation."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    terms = [float(kernel_fn(*(values[list(c)])))
             for c in itertools.combinations(range(n), degree)]
    return math.fsum(terms) / math.comb(n, degree)


def slow_quantile(values, weights, alpha: float) -> float:
    """Generalized inverse inf{x : F(x) >= alpha} by explicit scan."""
    order = np.argsort(values, kind="stable")
    vals = np.asarray(values, dtype=np.float64)[order]
    w = np.asarray(weights, dtype=np.float64)[order]
    cum = np.cumsum(w) / w.sum()
    for x, c in zip(vals, cum):
        if c >= alpha:
            return float(x)
    return float(vals[-1])


def binom_mean_root_law(theta: float, n: int, center: float, tau: float):
    """Exact law of tau * (mean - center) for n Bernoulli(theta) draws.

    Returns (values, probabilities) over the n+1 possible counts.
    """
    j = np.arange(n + 1)
    values = tau * (j / n - center)
    probs = stats.binom.pmf(j, n, theta)
    return values, probs


def dense_ks(sorted_values, cdf, lo: float, hi: float, m: int = 200_001) -> float:
    """Sup |EDF - G| approximated on a dense grid plus both sides of each atom."""
    xs = np.concatenate([
        np.linspace(lo, hi, m),
        sorted_values,
        np.nextafter(sorted_values, -np.inf),
    ])
    n = sorted_values.size
    edf = np.searchsorted(sorted_values, xs, side="right") / n
    return float(np.max(np.abs(edf - np.asarray(cdf(xs), dtype=np.float64))))


def exact_subsample_values(data, b: int, statistic) -> np.ndarray:
    """statistic over every size-b subset, in lexicographic order."""
    data = np.asarray(data, dtype=np.float64)
    return np.array([statistic(data[list(c)])
                     for c in itertools.combinations(range(data.shape[0]), b)])


def exact_bootstrap_law(data, statistic):
    """Weighted law of statistic over all multisets of size n from the sample.

    Returns (values, weights); weights are exact multinomial probabilities.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    values, weights = [], []
    for combo in itertools.combinations_with_replacement(range(n), n):
        counts = np.bincount(combo, minlength=n)
        perms = math.factorial(n)
        for c in counts:
            perms //= math.factorial(int(c))
        values.append(float(statistic(data[list(combo)])))
        weights.append(perms / n**n)
    return np.array(values), np.array(weights)
