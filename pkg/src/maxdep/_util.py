"""Shared plumbing: RNG streams and worker-count resolution."""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

SeedLike = int | Sequence[int]


def rng_stream(seed: SeedLike, *key: int) -> np.random.Generator:
    """Deterministic generator for the stream (seed, *key).

    Streams with distinct keys are statistically independent; the mapping is
    stable across runs and platforms (SeedSequence-based).
    """
    if isinstance(seed, (int, np.integer)):
        entropy = [int(seed)]
    else:
        entropy = [int(s) for s in seed]
    return np.random.default_rng(entropy + [int(k) for k in key])


def worker_count(n_jobs: int | None = None) -> int:
    """Resolve a worker count from the argument or MAXDEP_THREADS.

    MAXDEP_THREADS=0 (or n_jobs=0) means "all cores". Unset means serial.
    """
    if n_jobs is None:
        raw = os.environ.get("MAXDEP_THREADS", "").strip()
        if not raw:
            return 1
        n_jobs = int(raw)
    if n_jobs == 0:
        return os.cpu_count() or 1
    if n_jobs < 0:
        raise ValueError(f"worker count must be >= 0, got {n_jobs}")
    return n_jobs


def parallel_map(fn, items, n_jobs: int | None = None) -> list:
    """Order-preserving map, optionally across processes.

    Results are identical for any worker count: each item carries its own
    RNG stream and outputs are collected into preallocated slots by index.
    """
    workers = worker_count(n_jobs)
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=workers, batch_size="auto")(
        delayed(fn)(item) for item in items
    )
