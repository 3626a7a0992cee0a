"""Simulation of R^alpha through its Haar expansion.

Paths are evaluated on dyadic grids by FFT convolution, one kernel per
level: level j contributes ``sum_k xi_{j,k} phi_j(t - k 2^-j)`` where
``phi_j = R_alpha h_{j,0}``, i.e. a stride-``2^{L-j}`` comb of coefficients
convolved with the sampled ``phi_j``.  The spectrum of such a comb is the
length-``2^{j+1}`` FFT of the coefficients tiled periodically, so a level
costs a short FFT plus one multiply-add in frequency space, and a whole
path costs one inverse FFT.

Random coefficients are keyed by ``BasisIndex.code`` (drift -> 0,
``(j, k) -> 2^j + k``), never by position in a plan, so every
rearrangement of the series sees the same random variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .basis import (
    BasisIndex,
    RLParams,
    drift_term,
    integrated_haar_level,
    second_difference_power,
)
from .montecarlo import McEstimate, run_replicas
from .rng import GaussianStream

__all__ = [
    "DyadicGrid",
    "TruncationPlan",
    "PlanFormatError",
    "exact_covariance",
    "basis_covariance",
    "sample_path",
    "tail_sup_norm",
    "tail_sup_norms",
    "mc_tail_error",
    "mc_tail_curve",
]


@dataclass(frozen=True)
class DyadicGrid:
    level: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("grid level must be >= 1")

    @property
    def size(self) -> int:
        return (1 << self.level) + 1

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.size) / float(1 << self.level)


class PlanFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TruncationPlan:
    """A rearrangement of the terms ``{drift} + {(j, k): j <= max_level}``.

    ``order[i]`` is the code of the term at 1-based position ``i + 1``.
    """

    max_level: int
    order: np.ndarray

    def __post_init__(self):
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")
        order = np.asarray(self.order, dtype=np.int64)
        n = 1 << (self.max_level + 1)
        if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
            raise ValueError(f"order must be a permutation of the {n} term codes")
        order.setflags(write=False)
        object.__setattr__(self, "order", order)
        positions = np.empty(n, dtype=np.int64)
        positions[order] = np.arange(1, n + 1)
        positions.setflags(write=False)
        object.__setattr__(self, "_positions", positions)

    @property
    def n_terms(self) -> int:
        return self.order.size

    @property
    def positions(self) -> np.ndarray:
        """1-based plan position of each term code."""
        return self._positions

    def position(self, index: BasisIndex) -> int:
        return int(self._positions[index.code])

    def indices(self) -> list[BasisIndex]:
        return [BasisIndex.from_code(int(c)) for c in self.order]

    def __eq__(self, other):
        if not isinstance(other, TruncationPlan):
            return NotImplemented
        return self.max_level == other.max_level and np.array_equal(self.order, other.order)

    @classmethod
    def natural(cls, max_level: int) -> "TruncationPlan":
        # Drift, then (j, k) lexicographically: exactly ascending codes.
        return cls(max_level, np.arange(1 << (max_level + 1)))

    @classmethod
    def reversed_levels(cls, max_level: int) -> "TruncationPlan":
        codes = [0]
        for j in range(max_level, -1, -1):
            codes.extend(range(1 << j, 1 << (j + 1)))
        return cls(max_level, np.array(codes))

    @classmethod
    def random(cls, max_level: int, seed: int) -> "TruncationPlan":
        rng = np.random.default_rng(seed)
        return cls(max_level, rng.permutation(1 << (max_level + 1)))

    @classmethod
    def from_indices(cls, indices: Sequence[BasisIndex]) -> "TruncationPlan":
        levels = [ix.j for ix in indices]
        max_level = max(levels) if levels else -1
        if max_level < 0:
            raise ValueError("a plan needs at least one Haar level")
        return cls(max_level, np.array([ix.code for ix in indices]))

    @classmethod
    def parse(cls, text: str) -> "TruncationPlan":
        """Parse the plan file format: one term per line, ``drift`` or ``j k``.

        Blank lines and ``#`` comments are ignored.  Duplicates, omissions and
        malformed lines raise :class:`PlanFormatError`.
        """
        seen: dict[int, int] = {}
        order = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            try:
                if fields == ["drift"]:
                    ix = BasisIndex.drift()
                elif len(fields) == 2:
                    j, k = int(fields[0]), int(fields[1])
                    if j < 0:
                        raise ValueError(f"negative level {j}")
                    ix = BasisIndex(j, k)
                else:
                    raise ValueError(f"expected 'drift' or 'j k', got {line!r}")
            except ValueError as exc:
                raise PlanFormatError(f"line {lineno}: {exc}") from None
            if ix.code in seen:
                raise PlanFormatError(
                    f"line {lineno}: duplicate term {ix} (first on line {seen[ix.code]})"
                )
            seen[ix.code] = lineno
            order.append(ix.code)
        if not order:
            raise PlanFormatError("empty plan")
        max_level = max(BasisIndex.from_code(c).j for c in order)
        if max_level < 0:
            raise PlanFormatError("plan has no Haar terms")
        n = 1 << (max_level + 1)
        if len(order) != n:
            missing = sorted(set(range(n)) - set(order))
            shown = ", ".join(str(BasisIndex.from_code(c)) for c in missing[:5])
            raise PlanFormatError(f"plan omits {len(missing)} term(s), e.g. {shown}")
        return cls(max_level, np.array(order))

    @classmethod
    def read(cls, path: str | Path) -> "TruncationPlan":
        return cls.parse(Path(path).read_text())

    def dumps(self) -> str:
        return "".join(f"{ix}\n" for ix in self.indices())


# --------------------------------------------------------------------------
# Covariances


def exact_covariance(params: RLParams, s: float, t: float) -> float:
    """``Gamma(alpha)^-2 * int_0^{min(s,t)} (t-u)^{alpha-1} (s-u)^{alpha-1} du``.

    The factor with the smaller endpoint is handled as an algebraic weight
    (QUADPACK QAWS), so the endpoint behaviour at ``u = min(s, t)`` costs
    nothing.
    """
    s, t = float(s), float(t)
    if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
        raise ValueError("s and t must lie in [0, 1]")
    lo, hi = min(s, t), max(s, t)
    a = params.alpha - 1.0
    g2 = params.gamma_alpha**2
    if lo == 0.0:
        return 0.0
    if lo == hi:
        return lo ** (2 * params.alpha - 1) / ((2 * params.alpha - 1) * g2)
    value, _ = integrate.quad(
        lambda u: (hi - u) ** a,
        0.0,
        lo,
        weight="alg",
        wvar=(0.0, a),
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return value / g2


def basis_covariance(params: RLParams, s: float, t: float, max_level: int) -> float:
    """Partial Parseval sum over the drift and all levels j <= max_level."""
    if max_level < 0:
        raise ValueError("max_level must be >= 0")
    total = float(drift_term(params, s) * drift_term(params, t))
    pts = np.array([s, t], dtype=float)
    for j in range(max_level + 1):
        vals = integrated_haar_level(params, j, pts)
        total += float(np.dot(vals[:, 0], vals[:, 1]))
    return total


# --------------------------------------------------------------------------
# Path synthesis


class _Synthesizer:
    """Precomputed level spectra for one ``(alpha, max_level, grid_level)``."""

    def __init__(self, params: RLParams, max_level: int, grid_level: int):
        if grid_level < max_level + 2:
            raise ValueError(
                f"grid level {grid_level} too coarse for max level {max_level} "
                f"(need >= {max_level + 2})"
            )
        self.params = params
        self.max_level = max_level
        self.grid_level = grid_level
        self.npts = (1 << grid_level) + 1
        self.nfft = 1 << (grid_level + 1)
        half = self.nfft // 2
        t = np.arange(self.npts) / float(1 << grid_level)
        self.drift = drift_term(params, t)
        self.spectra = []
        for j in range(max_level + 1):
            kernel = (2.0 ** (j / 2) / params.gamma_alpha_plus_1) * second_difference_power(
                t, 2.0 ** -(j + 1), params.alpha
            )
            spec = np.fft.rfft(kernel, self.nfft)
            period = 1 << (j + 1)
            # Bins 0..half-1 reshaped so the coefficient FFT broadcasts over
            # the leading axis; bin `half` aliases to bin 0 of the period.
            self.spectra.append((spec[:half].reshape(half // period, period), spec[half]))

    def tails(self, xi: np.ndarray, positions: np.ndarray, cuts: np.ndarray) -> np.ndarray:
        """Paths of ``sum_{pos >= n} xi phi`` for each n in ``cuts`` (ascending).

        Terms are grouped into the disjoint segments between consecutive
        cuts; a segment's spectrum is built once and the tails are reverse
        cumulative sums of the segment spectra.
        """
        rows = cuts.size
        half = self.nfft // 2
        body = np.zeros((rows, half), dtype=complex)
        last = np.zeros(rows, dtype=complex)
        # segment[c] = index of the last cut <= position, or -1 (before all cuts)
        segment = np.searchsorted(cuts, positions, side="right") - 1
        for j, (spec, spec_last) in enumerate(self.spectra):
            lo, hi = 1 << j, 1 << (j + 1)
            seg = segment[lo:hi]
            for r in np.unique(seg[seg >= 0]):
                coef = np.where(seg == r, xi[lo:hi], 0.0)
                f = np.fft.fft(coef, n=hi)
                body[r].reshape(half // hi, hi)[...] += f[None, :] * spec
                last[r] += f[0] * spec_last
        body = np.cumsum(body[::-1], axis=0)[::-1]
        last = np.cumsum(last[::-1])[::-1]
        acc = np.concatenate([body, last[:, None]], axis=1)
        out = np.fft.irfft(acc, self.nfft, axis=1)[:, : self.npts]
        out[:, 0] = 0.0  # every basis function vanishes at t = 0; drop FFT round-off
        drift_rows = np.arange(rows) <= segment[0]
        out[drift_rows] += xi[0] * self.drift
        return out


@lru_cache(maxsize=8)
def _synthesizer(params: RLParams, max_level: int, grid_level: int) -> _Synthesizer:
    return _Synthesizer(params, max_level, grid_level)


def _variates(plan: TruncationPlan, stream: GaussianStream, replica: int) -> np.ndarray:
    return stream.normals(replica, 0, plan.n_terms)


def _check_cuts(plan: TruncationPlan, cuts: Iterable[int]) -> np.ndarray:
    cuts = np.asarray(list(cuts), dtype=np.int64).reshape(-1)
    if cuts.size == 0:
        raise ValueError("need at least one cut")
    if np.any(cuts < 1) or np.any(cuts > plan.n_terms + 1):
        raise ValueError(f"cut positions must lie in [1, {plan.n_terms + 1}]")
    return cuts


def sample_path(
    params: RLParams,
    plan: TruncationPlan,
    grid: DyadicGrid,
    stream: GaussianStream,
    replica: int,
) -> np.ndarray:
    """The truncated series summed over every plan term, on the grid."""
    synth = _synthesizer(params, plan.max_level, grid.level)
    xi = _variates(plan, stream, replica)
    return synth.tails(xi, plan.positions, np.array([1]))[0]


def tail_sup_norms(
    params: RLParams,
    plan: TruncationPlan,
    cuts: Sequence[int],
    grid: DyadicGrid,
    stream: GaussianStream,
    replica: int,
) -> np.ndarray:
    """Grid sup of ``|sum_{i >= n} xi_i phi_i|`` for each cut n (1-based)."""
    synth = _synthesizer(params, plan.max_level, grid.level)
    cuts = _check_cuts(plan, cuts)
    uniq, inverse = np.unique(cuts, return_inverse=True)
    xi = _variates(plan, stream, replica)
    sups = np.abs(synth.tails(xi, plan.positions, uniq)).max(axis=1)
    return sups[inverse]


def tail_sup_norm(
    params: RLParams,
    plan: TruncationPlan,
    n: int,
    grid: DyadicGrid,
    stream: GaussianStream,
    replica: int,
) -> float:
    return float(tail_sup_norms(params, plan, [n], grid, stream, replica)[0])


def mc_tail_curve(
    params: RLParams,
    plan: TruncationPlan,
    cuts: Sequence[int],
    grid: DyadicGrid,
    replicas: int,
    master_seed: int,
    workers: int = 1,
    return_samples: bool = False,
):
    """Monte Carlo estimates of the expected tail sup-norm at several cuts.

    Replica ``r`` uses variates keyed by ``(master_seed, r)``.  Returns a list
    of :class:`McEstimate` (and the replicas-by-cuts sample matrix when
    ``return_samples``).
    """
    if replicas < 2:
        raise ValueError("replicas must be >= 2 for a standard error")
    _check_cuts(plan, cuts)
    stream = GaussianStream(master_seed)
    # Warm the cache before threads race to build it.
    _synthesizer(params, plan.max_level, grid.level)
    samples = run_replicas(
        lambda r: tail_sup_norms(params, plan, cuts, grid, stream, r), replicas, workers
    )
    estimates = [McEstimate.from_samples(samples[:, i], stream.master_seed) for i in range(len(cuts))]
    if return_samples:
        return estimates, samples
    return estimates


def mc_tail_error(
    params: RLParams,
    plan: TruncationPlan,
    n: int,
    grid: DyadicGrid,
    replicas: int,
    master_seed: int,
    workers: int = 1,
) -> McEstimate:
    return mc_tail_curve(params, plan, [n], grid, replicas, master_seed, workers)[0]


def default_grid(max_level: int) -> DyadicGrid:
    """Grid three levels finer than the finest basis level."""
    return DyadicGrid(max_level + 3)


def level_cuts(lo: int, hi: int) -> list[int]:
    """Cut positions ``2^lo, ..., 2^hi``."""
    return [1 << e for e in range(lo, hi + 1)]

