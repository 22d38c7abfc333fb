"""Deterministic draw-index generation shared by the resampling engines.

All randomness flows through counter-based Philox generators keyed by
explicit integers. Within one engine call, draw i consumes a fixed slice of
the counter stream, so the i-th subsample is a pure function of (seed, i)
and results do not depend on evaluation order or worker count. Across
harness replicates, seeds are derived from (master seed, grid index,
replicate index, stream tag) via SeedSequence spawn keys, which keeps
parallel workers from ever sharing a stream.
"""

from __future__ import annotations

import numpy as np

__all__ = ["philox", "derive_seed", "random_subsets", "resample_indices"]


def philox(seed, *key: int) -> np.random.Generator:
    """Counter-based generator for ``seed`` refined by an integer key path."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key: int) -> int:
    """A 128-bit child seed, a pure function of (seed, key path)."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    lo, hi = (int(w) for w in ss.generate_state(2, np.uint64))
    return lo | (hi << 64)


def random_subsets(rng: np.random.Generator, draws: int, n: int, m: int) -> np.ndarray:
    """(draws, m) index rows, each a uniform m-subset of range(n), i.i.d. across rows.

    Small m against large n uses rejection on duplicate entries; otherwise
    each row keeps the m smallest of n random keys, which is uniform over
    subsets by exchangeability. Chunked to bound memory at wide n.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if m == 1 or m * (m - 1) <= 1.4 * n:
        # sparse regime: duplicate rows are a minority, so redraw just those
        idx = rng.integers(0, n, size=(draws, m))
        for _ in range(10_000):
            srt = np.sort(idx, axis=1)
            bad = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
            if bad.size == 0:
                return idx.astype(np.intp, copy=False)
            idx[bad] = rng.integers(0, n, size=(bad.size, m))
        raise RuntimeError("rejection sampling failed to converge")
    out = np.empty((draws, m), dtype=np.intp)
    step = max(1, int(4_000_000 // max(n, 1)))
    for start in range(0, draws, step):
        stop = min(start + step, draws)
        keys = rng.random((stop - start, n))
        out[start:stop] = np.argpartition(keys, m - 1, axis=1)[:, :m]
    return out


def resample_indices(rng: np.random.Generator, draws: int, n: int) -> np.ndarray:
    """(draws, n) with-replacement index rows for bootstrap resamples."""
    return rng.integers(0, n, size=(draws, n)).astype(np.intp, copy=False)
