"""Monte Carlo experiments over family grids, with versioned reports.

Each experiment sweeps a grid of data-generating distributions, replays a
quantile construction R times per grid point, and scores it against the
oracle truth: coverage of a root, rejection rate of a test, familywise
error of the stepdown procedure, or deviation diagnostics for the
subsampling estimate itself. Worst-case summaries over the grid stand in
for the uniformity the methods are supposed to deliver, with the grids
built to include the adversarial directions (near-degenerate boundary
parameters, means drifting at the root's own rate).

Determinism contract: every replicate's data seed derives from
(master seed, grid index, replicate index), and engine draws from the same
tuple plus a stream tag, so reports are bit-identical across runs and
thread counts. Replicates write into preallocated slots, which makes the
aggregation order irrelevant.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as spstats

from ._indices import derive_seed, philox, random_subsets, resample_indices
from .bootstrap import BootstrapPlan
from .distcore import (
    StepDistribution,
    dkw_bound,
    edf_quantile,
    kolmogorov_distance,
    sup_diff,
)
from .families import Family, make_family, oracle_root_distribution
from .inference import moment_test_bootstrap_aqlr, moment_test_subsampling, stepdown_fwer
from .roots import DegenerateSampleError, MeanRoot
from .subsample import MAX_DROP_FRAC, BRule, SubsamplePlan

__all__ = [
    "SCHEMA_HEADER",
    "EXPERIMENT_KINDS",
    "COVERAGE_ROOTS",
    "ExperimentSpec",
    "Report",
    "write_report",
    "mc_coverage",
    "mc_size",
    "mc_fwer",
    "dkw_check",
    "coverage_deficit_check",
    "drift_demo",
    "run_experiment",
]

SCHEMA_HEADER = "uniform-resample-report v1"

_LOG = logging.getLogger("uresample.harness")

EXPERIMENT_KINDS = ("coverage", "size", "fwer", "dkw-check", "failure-demo", "drift-demo")

COVERAGE_ROOTS = ("mean", "studentized-max-mean", "constrained-mean", "ks", "u-variance")

COVERAGE_METHODS = ("subsampling-feasible", "subsampling-oracle", "bootstrap")

#: grid keys consumed by the harness itself rather than the family constructor
RESERVED_KEYS = frozenset({"family", "n", "b"})


@dataclass
class ExperimentSpec:
    """Everything one experiment needs, mirrored by the CLI config schema."""

    kind: str
    family: str
    grid: tuple = ()
    n: int = 200
    replicates: int = 10_000
    draws: int = 2000
    b: int | None = None
    b_gamma: float = 0.5
    alpha1: float = 0.0
    alpha2: float = 0.05
    alpha: float = 0.05
    methods: tuple = ("subsampling-feasible",)
    root: str = "studentized-max-mean"
    eps: float = 0.05
    epsilons: tuple = (0.3, 0.6)
    gamma: float = 0.5
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        grid = tuple(dict(point) for point in self.grid)
        if not grid:
            raise ValueError("grid must be nonempty")
        self.grid = grid
        if self.replicates < 100:
            raise ValueError("replicates must be >= 100")
        if self.draws < 1:
            raise ValueError("draws must be >= 1")
        self.methods = tuple(self.methods)
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.alpha1 < 0.0 or self.alpha2 < 0.0 or self.alpha1 + self.alpha2 >= 1.0:
            raise ValueError("need alpha1, alpha2 >= 0 with alpha1 + alpha2 < 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.root not in COVERAGE_ROOTS:
            raise ValueError(f"unknown root {self.root!r}; expected one of {COVERAGE_ROOTS}")

    def point_n(self, point: dict) -> int:
        return int(point.get("n", self.n))

    def point_b(self, point: dict) -> int:
        if "b" in point:
            return int(point["b"])
        if self.b is not None:
            return int(self.b)
        return BRule(self.b_gamma).subsample_size(self.point_n(point))


@dataclass
class Report:
    """Rows for the CSV, a worst-case summary for the JSON, plus provenance."""

    kind: str
    columns: tuple
    rows: list
    summary: dict
    config: dict
    seed: int
    threads: int
    wall_time_s: float

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(SCHEMA_HEADER + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row.get(col, "")) for col in self.columns])
        return buf.getvalue()

    def to_json_text(self) -> str:
        # wall time is the one field allowed to differ between identical runs;
        # thread count is deliberately absent because it must not matter
        payload = {
            "schema": SCHEMA_HEADER,
            "kind": self.kind,
            "summary": self.summary,
            "config": self.config,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return json.dumps(list(value))
    return str(value)


def write_report(report: Report, out_dir, stem: str | None = None) -> tuple[Path, Path]:
    """Write <stem>.csv and <stem>.json under out_dir, creating it as needed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.kind
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    csv_path.write_text(report.to_csv_text())
    json_path.write_text(report.to_json_text())
    return csv_path, json_path


# ---------------------------------------------------------------------------
# shared machinery


def _se(p: float, r: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / r)


def _family_at(spec: ExperimentSpec, point: dict) -> Family:
    name = point.get("family", spec.family)
    params = {k: v for k, v in point.items() if k not in RESERVED_KEYS}
    return make_family(name, params)


def _alpha_pairs(spec: ExperimentSpec) -> tuple:
    raw = spec.options.get("alpha_pairs")
    if raw is None:
        return ((spec.alpha1, spec.alpha2),)
    pairs = []
    for entry in raw:
        entry = tuple(entry)
        if len(entry) != 2:
            raise ValueError(f"alpha_pairs entries must be [alpha1, alpha2], got {entry!r}")
        a1, a2 = (float(entry[0]), float(entry[1]))
        if a1 < 0.0 or a2 < 0.0 or a1 + a2 >= 1.0:
            raise ValueError(f"bad alpha pair {entry!r}")
        pairs.append((a1, a2))
    return tuple(pairs)


def _run_blocks(replicates: int, threads: int, body) -> None:
    """Run body(r) for r in range(replicates), fanned out over index blocks.

    Each body call writes only to its own replicate slot, so block order
    cannot affect the result and any worker count gives identical output.
    """
    if threads <= 1:
        for r in range(replicates):
            body(r)
        return
    edges = np.linspace(0, replicates, threads + 1).astype(int)

    def run_block(bounds):
        for r in range(bounds[0], bounds[1]):
            body(r)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run_block, list(zip(edges[:-1], edges[1:]))))


def _pair_criticals(sorted_vals: np.ndarray, pairs) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(len(pairs))
    hi = np.empty(len(pairs))
    for i, (a1, a2) in enumerate(pairs):
        lo[i] = -math.inf if a1 == 0.0 else edf_quantile(sorted_vals, a1)
        hi[i] = math.inf if a2 == 0.0 else edf_quantile(sorted_vals, 1.0 - a2)
    return lo, hi


def _filtered_sort(values: np.ndarray) -> np.ndarray:
    keep = np.isfinite(values)
    dropped = values.size - int(keep.sum())
    if dropped > MAX_DROP_FRAC * values.size:
        raise DegenerateSampleError(
            f"{dropped} of {values.size} draws degenerate, above the "
            f"{MAX_DROP_FRAC:.1%} policy limit"
        )
    if dropped == values.size:
        raise DegenerateSampleError("all draws degenerate")
    return np.sort(values[keep])


def _moments_2d(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = data.mean(axis=0)
    sd = np.sqrt(np.maximum((data * data).mean(axis=0) - mean * mean, 0.0))
    return mean, sd


def _stack_moments(stacks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = stacks.mean(axis=1)
    sd = np.sqrt(np.maximum((stacks * stacks).mean(axis=1) - mean * mean, 0.0))
    return mean, sd


def _data_seed(spec: ExperimentSpec, gi: int, r: int) -> int:
    return derive_seed(spec.seed, gi, r)


def _engine_rng(spec: ExperimentSpec, gi: int, r: int, tag: int) -> np.random.Generator:
    return philox(derive_seed(spec.seed, gi, r, tag))


# ---------------------------------------------------------------------------
# coverage runners, one per root kind
#
# Each runner fills covered[(method, pair, replicate)] with the indicator of
# c_hat(alpha1) <= R_n <= c_hat(1 - alpha2), where R_n is the oracle root on
# the replicate's data and the critical values come from the method under
# test. Subsampling variants share one set of subsample moments per
# replicate; the oracle variant recenters them at the truth instead of the
# plug-in.


def _check_events(covered, mi, pairs, r, rn, sorted_vals):
    lo, hi = _pair_criticals(sorted_vals, pairs)
    covered[mi, :, r] = (lo <= rn) & (rn <= hi)


def _cov_maxmean_point(spec, fam, gi, methods, pairs, threads, n, b):
    B = spec.draws
    mu = fam.mean(n)
    covered = np.zeros((len(methods), len(pairs), spec.replicates), dtype=bool)
    sub_methods = [m for m in methods if m.startswith("subsampling")]
    sqb, sqn = math.sqrt(b), math.sqrt(n)

    def body(r):
        data = fam.sample(n, _data_seed(spec, gi, r))
        mean, sd = _moments_2d(data)
        if np.any(sd == 0.0):
            raise DegenerateSampleError("degenerate coordinate in the full sample")
        rn = float(np.max(sqn * (mean - mu) / sd))
        if sub_methods:
            idx = random_subsets(_engine_rng(spec, gi, r, 1), B, n, b)
            ms, ss = _stack_moments(data[idx])
            with np.errstate(divide="ignore", invalid="ignore"):
                zf = sqb * (ms - mean) / ss
                zo = sqb * (ms - mu) / ss
            bad = (ss0 := (ss <= 0.0)).any(axis=1)
            for m in sub_methods:
                z = zf if m == "subsampling-feasible" else zo
                vals = np.where(bad, np.nan, np.where(ss0, -np.inf, z).max(axis=1))
                _check_events(covered, methods.index(m), pairs, r, rn, _filtered_sort(vals))
        if "bootstrap" in methods:
            idx = resample_indices(_engine_rng(spec, gi, r, 2), B, n)
            ms, ss = _stack_moments(data[idx])
            with np.errstate(divide="ignore", invalid="ignore"):
                z = sqn * (ms - mean) / ss
            vals = np.where((ss <= 0.0).any(axis=1), np.nan, np.where(ss <= 0.0, -np.inf, z).max(axis=1))
            _check_events(covered, methods.index("bootstrap"), pairs, r, rn, _filtered_sort(vals))

    _run_blocks(spec.replicates, threads, body)
    return covered


def _cov_plain(spec, fam, gi, methods, pairs, threads, n, b, clamp: bool):
    """Non-studentized location roots: tau_m (mean - center), optionally clamped."""
    B = spec.draws
    mu = float(fam.mean(n)[0])
    covered = np.zeros((len(methods), len(pairs), spec.replicates), dtype=bool)
    sub_methods = [m for m in methods if m.startswith("subsampling")]
    sqb, sqn = math.sqrt(b), math.sqrt(n)

    def stat(means, center):
        est = np.maximum(means, 0.0) if clamp else means
        return est - center

    def body(r):
        data = fam.sample(n, _data_seed(spec, gi, r))
        mean = float(data[:, 0].mean())
        rn = sqn * float(stat(np.array([mean]), mu)[0])
        if sub_methods:
            idx = random_subsets(_engine_rng(spec, gi, r, 1), B, n, b)
            ms = data[idx, 0].mean(axis=1)
            for m in sub_methods:
                center = mean if m == "subsampling-feasible" else mu
                vals = np.sort(sqb * stat(ms, center))
                _check_events(covered, methods.index(m), pairs, r, rn, vals)
        if "bootstrap" in methods:
            idx = resample_indices(_engine_rng(spec, gi, r, 2), B, n)
            ms = data[idx, 0].mean(axis=1)
            vals = np.sort(sqn * stat(ms, mean))
            _check_events(covered, methods.index("bootstrap"), pairs, r, rn, vals)

    _run_blocks(spec.replicates, threads, body)
    return covered


def _cov_uvar(spec, fam, gi, methods, pairs, threads, n, b):
    """Variance target via the pairwise half-squared-difference kernel.

    The degree-2 kernel statistic over any index multiset is the ddof-1
    variance of the values, so draws reduce to moment arithmetic. Feasible
    variants recenter at the plug-in value of the target, the full-sample
    divisor-n variance.
    """
    B = spec.draws
    theta = float(fam.variance_kernel_theta())
    covered = np.zeros((len(methods), len(pairs), spec.replicates), dtype=bool)
    sub_methods = [m for m in methods if m.startswith("subsampling")]
    sqb, sqn = math.sqrt(b), math.sqrt(n)

    def u_of(stacks, m):
        mean = stacks.mean(axis=1)
        v = np.maximum((stacks * stacks).mean(axis=1) - mean * mean, 0.0)
        return v * (m / (m - 1.0))

    def body(r):
        data = fam.sample(n, _data_seed(spec, gi, r))[:, 0]
        mean = float(data.mean())
        v_n = float(np.mean(data * data) - mean * mean)
        u_n = v_n * (n / (n - 1.0))
        rn = sqn * (u_n - theta)
        if sub_methods:
            idx = random_subsets(_engine_rng(spec, gi, r, 1), B, n, b)
            ub = u_of(data[idx], b)
            for m in sub_methods:
                center = v_n if m == "subsampling-feasible" else theta
                vals = np.sort(sqb * (ub - center))
                _check_events(covered, methods.index(m), pairs, r, rn, vals)
        if "bootstrap" in methods:
            idx = resample_indices(_engine_rng(spec, gi, r, 2), B, n)
            vals = np.sort(sqn * (u_of(data[idx], n) - v_n))
            _check_events(covered, methods.index("bootstrap"), pairs, r, rn, vals)

    _run_blocks(spec.replicates, threads, body)
    return covered


def _cov_ks(spec, fam, gi, methods, pairs, threads, n, b):
    """Scaled sup distance between the empirical CDF and its target.

    The oracle root compares the sample edf to the family cdf; the feasible
    draws compare subsample or resample edfs to the sample edf. Two-atom
    families reduce every distance to a difference of atom frequencies;
    continuous families work through order-statistic positions, resamples
    through per-position multiplicities.
    """
    B = spec.draws
    covered = np.zeros((len(methods), len(pairs), spec.replicates), dtype=bool)
    sub_methods = [m for m in methods if m.startswith("subsampling")]
    sqb, sqn = math.sqrt(b), math.sqrt(n)
    support = fam.two_point_support()

    if support is not None:
        lo_v, hi_v, p = support

        def body(r):
            data = fam.sample(n, _data_seed(spec, gi, r))[:, 0]
            m_hi = int((data == hi_v).sum())
            phat = m_hi / n
            rn = sqn * abs(phat - p)
            if sub_methods:
                j = _engine_rng(spec, gi, r, 1).hypergeometric(m_hi, n - m_hi, b, size=B)
                for m in sub_methods:
                    ref = phat if m == "subsampling-feasible" else p
                    vals = np.sort(sqb * np.abs(j / b - ref))
                    _check_events(covered, methods.index(m), pairs, r, rn, vals)
            if "bootstrap" in methods:
                j = _engine_rng(spec, gi, r, 2).binomial(n, phat, size=B)
                vals = np.sort(sqn * np.abs(j / n - phat))
                _check_events(covered, methods.index("bootstrap"), pairs, r, rn, vals)

        _run_blocks(spec.replicates, threads, body)
        return covered

    hi_n = np.arange(1, n + 1) / n
    lo_n = np.arange(0, n) / n
    hi_b = np.arange(1, b + 1) / b
    lo_b = np.arange(0, b) / b
    pvals = np.full(n, 1.0 / n)

    def body(r):
        data = fam.sample(n, _data_seed(spec, gi, r))[:, 0]
        order = np.argsort(data)
        xs = data[order]
        g = np.asarray(fam.cdf(xs), dtype=np.float64)
        rn = sqn * max(float((hi_n - g).max()), float((g - lo_n).max()))
        ranks = np.empty(n, dtype=np.intp)
        ranks[order] = np.arange(n)
        if sub_methods:
            idx = random_subsets(_engine_rng(spec, gi, r, 1), B, n, b)
            pos = np.sort(ranks[idx], axis=1)
            for m in sub_methods:
                if m == "subsampling-feasible":
                    gr = (pos + 1) / n
                    gl = pos / n
                else:
                    gr = gl = g[pos]
                d = np.maximum(
                    (hi_b[None, :] - gl).max(axis=1),
                    (gr - lo_b[None, :]).max(axis=1),
                )
                _check_events(covered, methods.index(m), pairs, r, rn, np.sort(sqb * d))
        if "bootstrap" in methods:
            counts = _engine_rng(spec, gi, r, 2).multinomial(n, pvals, size=B)
            c = counts.cumsum(axis=1)
            at = np.abs(c - np.arange(1, n + 1)[None, :]).max(axis=1)
            left = np.abs((c - counts) - np.arange(0, n)[None, :]).max(axis=1)
            vals = np.sort(sqn * np.maximum(at, left) / n)
            _check_events(covered, methods.index("bootstrap"), pairs, r, rn, vals)

    _run_blocks(spec.replicates, threads, body)
    return covered


def mc_coverage(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Coverage of the two-sided root event per grid point, per method, per level pair."""
    start = time.perf_counter()
    pairs = _alpha_pairs(spec)
    methods = list(spec.methods)
    for m in methods:
        if m not in COVERAGE_METHODS:
            raise ValueError(f"unknown coverage method {m!r}; expected one of {COVERAGE_METHODS}")
    rows: list[dict] = []
    diagnostics: list[dict] = []
    param_cols = _param_columns(spec)
    for gi, point in enumerate(spec.grid):
        fam = _family_at(spec, point)
        _LOG.info("%s: grid point %d/%d %s", spec.kind, gi + 1, len(spec.grid), point)
        n = spec.point_n(point)
        b = spec.point_b(point)
        try:
            if spec.root == "studentized-max-mean":
                covered = _cov_maxmean_point(spec, fam, gi, methods, pairs, threads, n, b)
            elif spec.root == "mean":
                covered = _cov_plain(spec, fam, gi, methods, pairs, threads, n, b, clamp=False)
            elif spec.root == "constrained-mean":
                covered = _cov_plain(spec, fam, gi, methods, pairs, threads, n, b, clamp=True)
            elif spec.root == "u-variance":
                covered = _cov_uvar(spec, fam, gi, methods, pairs, threads, n, b)
            elif spec.root == "ks":
                covered = _cov_ks(spec, fam, gi, methods, pairs, threads, n, b)
            else:  # pragma: no cover - spec validation rules this out
                raise ValueError(spec.root)
        except Exception as exc:  # grid point aborts, run continues
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        for mi, m in enumerate(methods):
            for pi, (a1, a2) in enumerate(pairs):
                cov = float(covered[mi, pi].mean())
                rows.append({
                    **_param_values(point, param_cols, spec.family),
                    "n": n, "b": b, "method": m,
                    "alpha1": a1, "alpha2": a2,
                    "coverage": cov, "se": _se(cov, spec.replicates),
                    "replicates": spec.replicates,
                })
    columns = tuple(param_cols + ["n", "b", "method", "alpha1", "alpha2",
                                  "coverage", "se", "replicates"])
    summary = _coverage_summary(rows, pairs, diagnostics)
    return _report(spec, columns, rows, summary, threads, start)


def _coverage_summary(rows, pairs, diagnostics) -> dict:
    worst = {}
    for row in rows:
        key = f"{row['method']}@({row['alpha1']},{row['alpha2']})"
        if key not in worst or row["coverage"] < worst[key]["coverage"]:
            worst[key] = {k: row[k] for k in row}
    return {
        "nominal": [1.0 - a1 - a2 for a1, a2 in pairs],
        "worst_by_method": worst,
        "min_coverage": min((r["coverage"] for r in rows), default=None),
        "aborted_points": diagnostics,
    }


def _param_columns(spec: ExperimentSpec) -> list:
    cols: list[str] = []
    for point in spec.grid:
        for key in point:
            if key not in cols and key not in ("n", "b"):
                cols.append(key)
    if "family" not in cols:
        cols.insert(0, "family")
    return cols


def _param_values(point: dict, cols, default_family: str = "") -> dict:
    out = {c: point.get(c, "") for c in cols}
    if "family" in out and out["family"] == "":
        out["family"] = default_family
    return out


def _report(spec, columns, rows, summary, threads, start) -> Report:
    config = asdict(spec)
    config["grid"] = [dict(p) for p in spec.grid]
    return Report(
        kind=spec.kind,
        columns=tuple(columns),
        rows=rows,
        summary=summary,
        config=config,
        seed=spec.seed,
        threads=threads,
        wall_time_s=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# moment-inequality size and stepdown FWER


SIZE_METHODS = ("subsampling", "bootstrap-aqlr")
FWER_METHODS = ("subsampling", "bootstrap")


def mc_size(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Rejection frequency of the configured moment tests per grid point.

    On null points (all coordinate means <= 0) the frequency is the test's
    size; the same driver measures power on violation points.
    """
    start = time.perf_counter()
    methods = list(spec.methods)
    for m in methods:
        if m not in SIZE_METHODS:
            raise ValueError(f"unknown size method {m!r}; expected one of {SIZE_METHODS}")
    rows: list[dict] = []
    diagnostics: list[dict] = []
    param_cols = _param_columns(spec)
    for gi, point in enumerate(spec.grid):
        fam = _family_at(spec, point)
        _LOG.info("%s: grid point %d/%d %s", spec.kind, gi + 1, len(spec.grid), point)
        n = spec.point_n(point)
        b = spec.point_b(point)
        reject = np.zeros((len(methods), spec.replicates), dtype=bool)

        def body(r):
            data = fam.sample(n, _data_seed(spec, gi, r))
            for mi, m in enumerate(methods):
                if m == "subsampling":
                    plan = SubsamplePlan(n=n, b=b, mode="random", draws=spec.draws,
                                         seed=derive_seed(spec.seed, gi, r, 1))
                    decision = moment_test_subsampling(data, spec.alpha, plan)
                else:
                    plan = BootstrapPlan(n=n, draws=spec.draws,
                                         seed=derive_seed(spec.seed, gi, r, 2))
                    decision = moment_test_bootstrap_aqlr(data, spec.alpha, spec.eps, plan)
                reject[mi, r] = decision.reject

        try:
            _run_blocks(spec.replicates, threads, body)
        except Exception as exc:
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        for mi, m in enumerate(methods):
            rate = float(reject[mi].mean())
            rows.append({
                **_param_values(point, param_cols, spec.family),
                "n": n, "b": b, "method": m, "alpha": spec.alpha,
                "reject_rate": rate, "se": _se(rate, spec.replicates),
                "replicates": spec.replicates,
            })
    columns = tuple(param_cols + ["n", "b", "method", "alpha",
                                  "reject_rate", "se", "replicates"])
    summary = {
        "alpha": spec.alpha,
        "max_reject_rate": max((r["reject_rate"] for r in rows), default=None),
        "aborted_points": diagnostics,
    }
    return _report(spec, columns, rows, summary, threads, start)


def mc_fwer(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Familywise error of the stepdown procedure per truth pattern.

    A violation is any rejection of a coordinate whose true mean is <= 0.
    The runner also audits every replicate's trace for the structural
    guarantees (nonincreasing critical values, nested rejection sets) and
    reports violation counts rather than assuming them.
    """
    start = time.perf_counter()
    methods = list(spec.methods)
    for m in methods:
        if m not in FWER_METHODS:
            raise ValueError(f"unknown fwer method {m!r}; expected one of {FWER_METHODS}")
    rows: list[dict] = []
    diagnostics: list[dict] = []
    param_cols = _param_columns(spec)
    for gi, point in enumerate(spec.grid):
        fam = _family_at(spec, point)
        _LOG.info("%s: grid point %d/%d %s", spec.kind, gi + 1, len(spec.grid), point)
        n = spec.point_n(point)
        b = spec.point_b(point)
        mu = fam.mean(n)
        null = np.flatnonzero(mu <= 0.0)
        false_rej = np.zeros((len(methods), spec.replicates), dtype=bool)
        trace_bad = np.zeros((len(methods), spec.replicates), dtype=bool)

        def body(r):
            data = fam.sample(n, _data_seed(spec, gi, r))
            for mi, m in enumerate(methods):
                if m == "subsampling":
                    plan = SubsamplePlan(n=n, b=b, mode="random", draws=spec.draws,
                                         seed=derive_seed(spec.seed, gi, r, 1))
                else:
                    plan = BootstrapPlan(n=n, draws=spec.draws,
                                         seed=derive_seed(spec.seed, gi, r, 2))
                res = stepdown_fwer(data, spec.alpha, m, plan)
                false_rej[mi, r] = bool(set(res.rejected) & set(null.tolist()))
                crits = [s.critical_value for s in res.steps]
                nested = all(set(res.steps[i + 1].active) < set(res.steps[i].active)
                             for i in range(len(res.steps) - 1))
                monotone = all(crits[i + 1] <= crits[i] for i in range(len(crits) - 1))
                trace_bad[mi, r] = not (nested and monotone)

        try:
            _run_blocks(spec.replicates, threads, body)
        except Exception as exc:
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        for mi, m in enumerate(methods):
            rate = float(false_rej[mi].mean())
            rows.append({
                **_param_values(point, param_cols, spec.family),
                "n": n, "b": b, "method": m, "alpha": spec.alpha,
                "fwer": rate, "se": _se(rate, spec.replicates),
                "trace_violations": int(trace_bad[mi].sum()),
                "replicates": spec.replicates,
            })
    columns = tuple(param_cols + ["n", "b", "method", "alpha", "fwer", "se",
                                  "trace_violations", "replicates"])
    summary = {
        "alpha": spec.alpha,
        "max_fwer": max((r["fwer"] for r in rows), default=None),
        "total_trace_violations": sum(r["trace_violations"] for r in rows),
        "aborted_points": diagnostics,
    }
    return _report(spec, columns, rows, summary, threads, start)


# ---------------------------------------------------------------------------
# deviation diagnostics


def dkw_check(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Frequency of sup-deviation exceedances against the block bound.

    Per replicate, the oracle subsampling estimate (mean root centered at
    the truth) is compared to the exact size-b root law; a violation at
    epsilon is a Kolmogorov distance above it. The reported bound is
    min(1, (1/eps) sqrt(2 pi / floor(n/b))), flagged vacuous at 1.
    """
    start = time.perf_counter()
    rows: list[dict] = []
    diagnostics: list[dict] = []
    param_cols = _param_columns(spec)
    for gi, point in enumerate(spec.grid):
        fam = _family_at(spec, point)
        _LOG.info("%s: grid point %d/%d %s", spec.kind, gi + 1, len(spec.grid), point)
        n = spec.point_n(point)
        b = spec.point_b(point)
        if fam.two_point_support() is None:
            diagnostics.append({"point": dict(point), "error": "needs a two-atom family for the exact size-b law"})
            continue
        mu = float(fam.mean(n)[0])
        j_b = oracle_root_distribution(fam, MeanRoot(center=mu), b, mode="exact")
        k_n = n // b
        dist = np.zeros(spec.replicates)
        sqb = math.sqrt(b)

        def body(r):
            data = fam.sample(n, _data_seed(spec, gi, r))[:, 0]
            idx = random_subsets(_engine_rng(spec, gi, r, 1), spec.draws, n, b)
            vals = sqb * (data[idx].mean(axis=1) - mu)
            dist[r] = kolmogorov_distance(StepDistribution.from_values(vals), j_b)

        try:
            _run_blocks(spec.replicates, threads, body)
        except Exception as exc:
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        for eps in spec.epsilons:
            raw = dkw_bound(eps, k_n)
            rate = float((dist > eps).mean())
            rows.append({
                **_param_values(point, param_cols, spec.family),
                "n": n, "b": b,
                "epsilon": eps, "k_n": k_n,
                "violation_rate": rate,
                "bound": min(1.0, raw),
                "se": _se(rate, spec.replicates),
                "vacuous": raw >= 1.0,
                "replicates": spec.replicates,
            })
    columns = tuple(param_cols + ["n", "b", "epsilon", "k_n", "violation_rate",
                                  "bound", "se", "vacuous", "replicates"])
    holds = all(r["violation_rate"] <= r["bound"] + 3.0 * r["se"] for r in rows)
    summary = {
        "all_within_bound": holds,
        "max_violation_rate": max((r["violation_rate"] for r in rows), default=None),
        "aborted_points": diagnostics,
    }
    return _report(spec, columns, rows, summary, threads, start)


def _frozen(fam: Family, n: int) -> Family:
    frozen_at = getattr(fam, "frozen_at", None)
    return frozen_at(n) if frozen_at is not None else fam


def _oracle_law(spec, fam, root, m: int, freeze_n: int, gi: int, tag: int) -> StepDistribution:
    frozen = _frozen(fam, freeze_n)
    if frozen.two_point_support() is not None:
        return oracle_root_distribution(frozen, root, m, mode="exact")
    draws = int(spec.options.get("oracle_draws", 200_000))
    return oracle_root_distribution(frozen, root, m, mode="monte-carlo",
                                    draws=draws, seed=derive_seed(spec.seed, gi, tag))


def coverage_deficit_check(spec: ExperimentSpec, epsilons=None, gamma: float | None = None,
                     threads: int = 1) -> Report:
    """Finite-sample coverage floors for oracle subsampling, checked empirically.

    For each grid point the driver computes the three deficit terms
    (block bound over gamma*eps, plus an indicator that the size-b and
    size-n root laws differ by more than (1-gamma)*eps in the relevant
    direction), then verifies that the observed one- and two-sided coverage
    of the oracle subsampling quantiles stays above 1 - (level + eps +
    deficit) - 3 SE. Floors at or below zero are flagged vacuous.
    """
    start = time.perf_counter()
    eps_list = tuple(float(e) for e in (epsilons if epsilons is not None else spec.epsilons))
    g = float(gamma if gamma is not None else spec.gamma)
    if not 0.0 < g < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {g}")
    a1, a2 = spec.alpha1, spec.alpha2
    rows: list[dict] = []
    diagnostics: list[dict] = []
    param_cols = _param_columns(spec)
    clamp = spec.root == "constrained-mean"
    for gi, point in enumerate(spec.grid):
        fam = _family_at(spec, point)
        _LOG.info("%s: grid point %d/%d %s", spec.kind, gi + 1, len(spec.grid), point)
        n = spec.point_n(point)
        b = spec.point_b(point)
        k_n = n // b
        mu = float(fam.mean(n)[0])

        def stat(means):
            return np.maximum(means, 0.0) - mu if clamp else means - mu

        root = _DeficitRoot(mu, clamp)
        try:
            j_n = _oracle_law(spec, fam, root, n, n, gi, 71)
            j_b = _oracle_law(spec, fam, root, b, n, gi, 72)
        except Exception as exc:
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        s1 = sup_diff(j_b, j_n)
        s2 = sup_diff(j_n, j_b)
        s3 = max(s1, s2)

        cov_lo = np.zeros(spec.replicates, dtype=bool)
        cov_hi = np.zeros(spec.replicates, dtype=bool)
        sqb, sqn = math.sqrt(b), math.sqrt(n)

        def body(r):
            data = fam.sample(n, _data_seed(spec, gi, r))[:, 0]
            rn = sqn * float(stat(np.array([data.mean()]))[0])
            idx = random_subsets(_engine_rng(spec, gi, r, 1), spec.draws, n, b)
            vals = np.sort(sqb * stat(data[idx].mean(axis=1)))
            c_lo = -math.inf if a1 == 0.0 else edf_quantile(vals, a1)
            c_hi = math.inf if a2 == 0.0 else edf_quantile(vals, 1.0 - a2)
            cov_lo[r] = rn >= c_lo
            cov_hi[r] = rn <= c_hi

        try:
            _run_blocks(spec.replicates, threads, body)
        except Exception as exc:
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        p_lo = float(cov_lo.mean())
        p_hi = float(cov_hi.mean())
        p_two = float((cov_lo & cov_hi).mean())
        base = math.sqrt(2.0 * math.pi / k_n)
        for eps in eps_list:
            block = base / (g * eps)
            d1 = block + (1.0 if s1 > (1.0 - g) * eps else 0.0)
            d2 = block + (1.0 if s2 > (1.0 - g) * eps else 0.0)
            d3 = block + (1.0 if s3 > (1.0 - g) * eps else 0.0)
            lb_hi = 1.0 - (a2 + eps + d1)
            lb_lo = 1.0 - (a1 + eps + d2)
            lb_two = 1.0 - (a1 + a2 + eps + d3)
            rows.append({
                **_param_values(point, param_cols, spec.family),
                "n": n, "b": b, "k_n": k_n,
                "epsilon": eps, "gamma": g,
                "sup_b_minus_n": s1, "sup_n_minus_b": s2, "sup_abs": s3,
                "delta1": d1, "delta2": d2, "delta3": d3,
                "cov_upper": p_hi, "cov_lower": p_lo, "cov_two_sided": p_two,
                "floor_upper": lb_hi, "floor_lower": lb_lo, "floor_two_sided": lb_two,
                "holds_upper": p_hi >= lb_hi - 3.0 * _se(p_hi, spec.replicates),
                "holds_lower": p_lo >= lb_lo - 3.0 * _se(p_lo, spec.replicates),
                "holds_two_sided": p_two >= lb_two - 3.0 * _se(p_two, spec.replicates),
                "vacuous": lb_two <= 0.0,
                "replicates": spec.replicates,
            })
    columns = tuple(param_cols + [
        "n", "b", "k_n", "epsilon", "gamma",
        "sup_b_minus_n", "sup_n_minus_b", "sup_abs",
        "delta1", "delta2", "delta3",
        "cov_upper", "cov_lower", "cov_two_sided",
        "floor_upper", "floor_lower", "floor_two_sided",
        "holds_upper", "holds_lower", "holds_two_sided",
        "vacuous", "replicates",
    ])
    summary = {
        "all_floors_hold": all(r["holds_upper"] and r["holds_lower"] and r["holds_two_sided"]
                               for r in rows),
        "vacuous_rows": sum(1 for r in rows if r["vacuous"]),
        "aborted_points": diagnostics,
    }
    return _report(spec, columns, rows, summary, threads, start)


@dataclass(frozen=True)
class _DeficitRoot:
    """Location root for the deficit driver, optionally clamped at zero."""

    center: float
    clamp: bool

    def __call__(self, data) -> float:
        data = np.asarray(data, dtype=np.float64).reshape(len(data), -1)
        mean = float(data[:, 0].mean())
        est = max(mean, 0.0) if self.clamp else mean
        return math.sqrt(data.shape[0]) * (est - self.center)

    def batch(self, stacks) -> np.ndarray:
        stacks = np.asarray(stacks, dtype=np.float64)
        if stacks.ndim == 3:
            stacks = stacks[:, :, 0]
        mean = stacks.mean(axis=1)
        est = np.maximum(mean, 0.0) if self.clamp else mean
        return math.sqrt(stacks.shape[1]) * (est - self.center)


def drift_demo(spec, alpha1: float | None = None, n_grid=None, *, b: int | None = None,
               replicates: int = 2000, draws: int = 2000, seed: int = 0,
               threads: int = 1) -> Report:
    """Lower one-sided behavior of the clamped-mean root under drifting truth.

    Per (h, n) grid point: coverage of the alpha1 lower quantile event, and
    the mean absolute deviation of the estimated quantile from the standard
    normal quantile it should approach when alpha1 is above the clamp's
    mass at zero.

    Accepts either a full ExperimentSpec or the short form
    ``drift_demo(h_grid, alpha1, n_grid)``.
    """
    if not isinstance(spec, ExperimentSpec):
        h_grid = tuple(float(h) for h in spec)
        if alpha1 is None or n_grid is None:
            raise ValueError("short form needs drift_demo(h_grid, alpha1, n_grid)")
        grid = tuple({"h": h, "n": int(n)} for h in h_grid for n in n_grid)
        spec = ExperimentSpec(
            kind="drift-demo", family="normal-drift", grid=grid,
            replicates=replicates, draws=draws, b=b, alpha1=float(alpha1),
            root="constrained-mean", seed=seed,
        )
    start = time.perf_counter()
    a1 = spec.alpha1
    if not 0.0 < a1 < 1.0:
        raise ValueError("drift-demo needs alpha1 in (0, 1)")
    target = float(spstats.norm.ppf(a1))
    rows: list[dict] = []
    diagnostics: list[dict] = []
    param_cols = _param_columns(spec)
    for gi, point in enumerate(spec.grid):
        fam = _family_at(spec, point)
        _LOG.info("%s: grid point %d/%d %s", spec.kind, gi + 1, len(spec.grid), point)
        n = spec.point_n(point)
        b = spec.point_b(point)
        mu = float(fam.mean(n)[0])
        covered = np.zeros(spec.replicates, dtype=bool)
        qdev = np.zeros(spec.replicates)
        sqb, sqn = math.sqrt(b), math.sqrt(n)

        def body(r):
            data = fam.sample(n, _data_seed(spec, gi, r))[:, 0]
            mean = float(data.mean())
            rn = sqn * (max(mean, 0.0) - mu)
            idx = random_subsets(_engine_rng(spec, gi, r, 1), spec.draws, n, b)
            vals = np.sort(sqb * (np.maximum(data[idx].mean(axis=1), 0.0) - mean))
            c_lo = edf_quantile(vals, a1)
            covered[r] = rn >= c_lo
            qdev[r] = abs(c_lo - target)

        try:
            _run_blocks(spec.replicates, threads, body)
        except Exception as exc:
            diagnostics.append({"point": dict(point), "error": f"{type(exc).__name__}: {exc}"})
            continue
        cov = float(covered.mean())
        rows.append({
            **_param_values(point, param_cols, spec.family),
            "n": n, "b": b, "alpha1": a1,
            "coverage": cov, "se": _se(cov, spec.replicates),
            "quantile_dev_mean": float(qdev.mean()),
            "quantile_dev_se": float(qdev.std(ddof=1) / math.sqrt(spec.replicates)),
            "target_quantile": target,
            "replicates": spec.replicates,
        })
    columns = tuple(param_cols + ["n", "b", "alpha1", "coverage", "se",
                                  "quantile_dev_mean", "quantile_dev_se",
                                  "target_quantile", "replicates"])
    summary = {
        "nominal": 1.0 - a1,
        "min_coverage": min((r["coverage"] for r in rows), default=None),
        "max_quantile_dev": max((r["quantile_dev_mean"] for r in rows), default=None),
        "aborted_points": diagnostics,
    }
    return _report(spec, columns, rows, summary, threads, start)


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Dispatch an experiment spec to its driver."""
    threads = max(1, int(threads))
    if spec.kind in ("coverage", "failure-demo"):
        return mc_coverage(spec, threads)
    if spec.kind == "size":
        return mc_size(spec, threads)
    if spec.kind == "fwer":
        return mc_fwer(spec, threads)
    if spec.kind == "dkw-check":
        if spec.options.get("deficits"):
            return coverage_deficit_check(spec, threads=threads)
        return dkw_check(spec, threads)
    if spec.kind == "drift-demo":
        return drift_demo(spec, threads)
    raise ValueError(f"unknown experiment kind {spec.kind!r}")  # pragma: no cover
