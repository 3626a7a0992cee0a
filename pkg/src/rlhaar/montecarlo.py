"""Replica bookkeeping shared by every Monte Carlo estimator."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Replicas are always evaluated in chunks of this size, whatever the worker
# count, so per-replica arithmetic never depends on the partitioning.
CHUNK = 16


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    replicas: int
    master_seed: int

    @classmethod
    def from_samples(cls, samples: np.ndarray, master_seed: int) -> "McEstimate":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n < 2:
            raise ValueError("need at least two replicas for a standard error")
        mean = float(np.mean(samples))
        sd = float(np.std(samples, ddof=1))
        return cls(mean=mean, std_error=sd / math.sqrt(n), replicas=n, master_seed=master_seed)


def run_replicas(
    per_replica: Callable[[int], np.ndarray],
    replicas: int,
    workers: int = 1,
) -> np.ndarray:
    """Evaluate ``per_replica(r)`` for r = 0..replicas-1; rows in replica order.

    ``per_replica`` must return a 1-d array of fixed length.  Threads pick up
    fixed chunks of replica ids; the stacked result is bit-identical for any
    ``workers``.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    chunks = [range(s, min(s + CHUNK, replicas)) for s in range(0, replicas, CHUNK)]

    def run_chunk(ids: range) -> list[np.ndarray]:
        return [np.atleast_1d(per_replica(r)) for r in ids]

    if workers == 1:
        parts = [run_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))
    return np.stack([row for part in parts for row in part])
