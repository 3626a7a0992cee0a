"""Single-level slices of the critical expansion and their lower bounds.

For a level j and shift set K the process

    X_K(t) = sum_{k in K} xi_k H(t - 2k),     0 <= t <= 2^{j+1},

is the unscaled K-part of level j.  This module evaluates it, computes its
canonical distances exactly, and implements the combinatorial construction
that produces many well-separated points (block selection, maximal
harmonic sums, separation scores), the Sudakov-type minorant built on
those points, and the level-set extraction that applies the whole argument
to an arbitrary rearrangement.

X_K shares its variates with the Haar coefficients of level j: ``xi_k`` is
stream counter ``2^j + k``, the code of ``(j, k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .basis import GAMMA_5_2, RLParams, eval_H, integrated_haar_level
from .montecarlo import McEstimate, run_replicas
from .process import TruncationPlan
from .rng import GaussianStream

__all__ = [
    "ShiftSet",
    "BlockSelection",
    "SeparatedSequence",
    "J_MIN",
    "DEFAULT_C_SUD",
    "Z_LOWER_CONSTANT",
    "xk_path",
    "rescale_to_unit",
    "increment_variance",
    "z_variance",
    "harmonic_window_sum",
    "max_harmonic_sum",
    "lemma1_ratio",
    "select_dense_blocks",
    "construct_separated_sequence",
    "separation_scores",
    "check_separation",
    "sudakov_bound",
    "mc_sup_xk",
    "tail_level_set",
]

# Below this level the selected blocks are too small for the harmonic-sum
# step to say anything (q < 2).
J_MIN = 8
DEFAULT_C_SUD = 0.2


def _z_lower_constant() -> float:
    # inf_{x >= 2} x H(x)^2; the limit at infinity is 9/16.
    x = np.geomspace(2.0, 1e12, 20001)
    return float(min(np.min(x * eval_H(x) ** 2), 9.0 / 16.0))


Z_LOWER_CONSTANT = _z_lower_constant()


@dataclass(frozen=True, eq=False)
class ShiftSet:
    level: int
    K: np.ndarray

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be >= 1")
        K = np.asarray(self.K, dtype=np.int64).reshape(-1)
        if K.size and (K[0] < 0 or K[-1] >= (1 << self.level)):
            raise ValueError(f"shifts must lie in [0, {(1 << self.level) - 1}]")
        if np.any(np.diff(K) <= 0):
            raise ValueError("shifts must be strictly increasing")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    def __len__(self) -> int:
        return int(self.K.size)

    @classmethod
    def full(cls, level: int) -> "ShiftSet":
        return cls(level, np.arange(1 << level))

    @classmethod
    def random(cls, level: int, size: int, rng: np.random.Generator) -> "ShiftSet":
        return cls(level, np.sort(rng.choice(1 << level, size=size, replace=False)))

    @classmethod
    def of(cls, level: int, shifts: Sequence[int]) -> "ShiftSet":
        return cls(level, np.array(sorted(set(int(k) for k in shifts)), dtype=np.int64))


@dataclass(frozen=True, eq=False)
class BlockSelection:
    level: int
    width: int
    selected: np.ndarray
    counts: np.ndarray

    @property
    def m(self) -> int:
        return int(self.selected.size)


@dataclass(frozen=True, eq=False)
class SeparatedSequence:
    """Points ``t_1 < ... < t_m`` with their separation scores.

    ``scores[0]`` is ``inf`` (the first point has no predecessor).  A
    ``degenerate`` sequence is empty: the level was below ``J_MIN``.
    """

    level: int
    points: np.ndarray
    scores: np.ndarray
    blocks: np.ndarray
    degenerate: bool = False

    @property
    def m(self) -> int:
        return int(self.points.size)

    @property
    def min_score(self) -> float:
        return float(np.min(self.scores[1:])) if self.m > 1 else math.inf


def _xi(shifts: ShiftSet, stream: GaussianStream, replica: int) -> np.ndarray:
    j = shifts.level
    return stream.normals(replica, 1 << j, 1 << j)[shifts.K]


def xk_path(
    j: int, K: ShiftSet, points, stream: GaussianStream, replica: int
) -> np.ndarray:
    """Direct evaluation of X_K at arbitrary points of [0, 2^{j+1}]."""
    if K.level != j:
        raise ValueError("shift set level does not match j")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if np.any(pts < 0) or np.any(pts > (1 << (j + 1))):
        raise ValueError(f"points must lie in [0, {1 << (j + 1)}]")
    xi = _xi(K, stream, replica)
    out = np.zeros_like(pts)
    for start in range(0, len(K), 1024):
        ks = K.K[start : start + 1024]
        out += xi[start : start + 1024] @ eval_H(pts[None, :] - 2.0 * ks[:, None])
    return out


def rescale_to_unit(
    j: int, K: ShiftSet, t, stream: GaussianStream, replica: int
) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the level-j scaling identity, with shared variates.

    Returns ``(sum_k xi_{j,k} R_{3/2} h_{j,k}(t), X_K(2^{j+1} t) / (2^{3/2+j} Gamma(5/2)))``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    xi = _xi(K, stream, replica)
    lhs = xi @ integrated_haar_level(RLParams(1.5), j, t)[K.K]
    rhs = xk_path(j, K, (1 << (j + 1)) * t, stream, replica) / (2.0 ** (1.5 + j) * GAMMA_5_2)
    return lhs, rhs


def _check_order(s: float, t: float) -> None:
    if not s < t:
        raise ValueError(f"need s < t, got s={s}, t={t}")


def increment_variance(K: ShiftSet, s: float, t: float) -> float:
    """``E (X_K(t) - X_K(s))^2 = sum_k (H(t - 2k) - H(s - 2k))^2``."""
    _check_order(s, t)
    two_k = 2.0 * K.K
    return float(np.sum((eval_H(t - two_k) - eval_H(s - two_k)) ** 2))


def z_variance(K: ShiftSet, s: float, t: float) -> float:
    """Variance of the part of X_K(t) orthogonal to X_K(s): shifts s/2 < k <= t/2."""
    _check_order(s, t)
    ks = K.K[(K.K > s / 2) & (K.K <= t / 2)]
    return float(np.sum(eval_H(t - 2.0 * ks) ** 2))


def harmonic_window_sum(K: ShiftSet, s: float, t: float) -> float:
    """``sum_{k in K: s/2 < k <= t/2 - 1} 1 / (t - 2k)``."""
    ks = K.K[(K.K > s / 2) & (K.K <= t / 2 - 1)]
    return float(np.sum(1.0 / (t - 2.0 * ks)))


def max_harmonic_sum(points) -> tuple[int, float]:
    """``max_{1 < r <= n} sum_{i < r} 1/(s_r - s_i)`` and its argmax r (1-based).

    Ties go to the smallest r.
    """
    s = np.asarray(points, dtype=float).reshape(-1)
    if s.size < 2:
        raise ValueError("need at least two points")
    if np.any(np.diff(s) <= 0):
        raise ValueError("points must be strictly increasing (no duplicates)")
    diff = s[:, None] - s[None, :]
    inv = np.zeros_like(diff)
    lower = np.tril_indices(s.size, k=-1)
    inv[lower] = 1.0 / diff[lower]
    sums = inv.sum(axis=1)
    r = int(np.argmax(sums[1:])) + 1
    return r + 1, float(sums[r])


def lemma1_ratio(points, interval_length: float) -> float:
    """Maximal harmonic sum over ``(q / |T|) ln q`` for 2q points in T."""
    s = np.asarray(points, dtype=float).reshape(-1)
    if s.size % 2:
        raise ValueError("need an even number 2q of points")
    q = s.size // 2
    if q < 2:
        raise ValueError("need q >= 2 (ln q must be positive)")
    if interval_length <= 0 or s[-1] - s[0] > interval_length:
        raise ValueError("points do not fit in an interval of the given length")
    _, value = max_harmonic_sum(s)
    return value / ((q / interval_length) * math.log(q))


def _check_even(j: int) -> None:
    if j < 2 or j % 2:
        raise ValueError(f"block operations need an even level j >= 2, got {j}")


def select_dense_blocks(j: int, K: ShiftSet) -> BlockSelection:
    """Blocks ``[i w, (i+1) w)``, ``w = 2^{j/2}``, holding at least w/4 shifts."""
    _check_even(j)
    if K.level != j:
        raise ValueError("shift set level does not match j")
    width = 1 << (j // 2)
    counts = np.bincount(K.K // width, minlength=width)
    selected = np.flatnonzero(4 * counts >= width)
    return BlockSelection(level=j, width=width, selected=selected, counts=counts)


def separation_scores(K: ShiftSet, t_sequence) -> np.ndarray:
    """Per-point sums ``sum_{k in K: t_{i-1}/2 < k <= t_i/2 - 1} 1/(t_i - 2k)``."""
    t = np.asarray(t_sequence, dtype=float).reshape(-1)
    if np.any(np.diff(t) <= 0):
        raise ValueError("t-sequence must be strictly increasing")
    scores = np.full(t.size, math.inf)
    for i in range(1, t.size):
        scores[i] = harmonic_window_sum(K, t[i - 1], t[i])
    return scores


def check_separation(K: ShiftSet, t_sequence) -> float:
    """Minimum separation score over i >= 2; ``inf`` for a single point."""
    scores = separation_scores(K, t_sequence)
    return float(np.min(scores[1:])) if scores.size > 1 else math.inf


def construct_separated_sequence(j: int, K: ShiftSet) -> SeparatedSequence:
    """One point ``t = 2v`` per dense block, v maximising the block's harmonic sum.

    In each selected block the first ``2q = 2 floor(n/2)`` of its n shifts
    are used.  Levels below ``J_MIN`` give a flagged empty sequence.
    """
    _check_even(j)
    if K.level != j:
        raise ValueError("shift set level does not match j")
    if len(K) < 1 << (j - 1):
        raise ValueError(f"#(K) = {len(K)} < 2^(j-1) = {1 << (j - 1)}")
    if j < J_MIN:
        empty = np.empty(0)
        return SeparatedSequence(j, empty, empty, np.empty(0, dtype=np.int64), degenerate=True)
    sel = select_dense_blocks(j, K)
    block_of = K.K // sel.width
    vs = []
    for iota in sel.selected:
        members = K.K[block_of == iota]
        subset = members[: 2 * (members.size // 2)]
        r, _ = max_harmonic_sum(subset)
        vs.append(int(subset[r - 1]))
    points = 2.0 * np.array(vs, dtype=float)
    return SeparatedSequence(
        level=j,
        points=points,
        scores=separation_scores(K, points),
        blocks=sel.selected.copy(),
    )


def sudakov_bound(K: ShiftSet, t_sequence, c_sud: float = DEFAULT_C_SUD) -> float:
    """``c_sud * sqrt(ln m) * min_{a != b} ||X_K(t_a) - X_K(t_b)||_2``."""
    t = np.asarray(t_sequence, dtype=float).reshape(-1)
    if t.size < 2:
        raise ValueError("need at least two points")
    if c_sud <= 0:
        raise ValueError("c_sud must be positive")
    if np.unique(t).size != t.size:
        raise ValueError("duplicate points in t-sequence")
    profiles = eval_H(t[:, None] - 2.0 * K.K[None, :])
    dmin = math.sqrt(float(np.min(pdist(profiles, "sqeuclidean"))))
    return c_sud * math.sqrt(math.log(t.size)) * dmin


class _XkSynthesizer:
    """FFT evaluation of X_K on the grid ``i / ppu``, i = 0 .. ppu 2^{j+1}."""

    def __init__(self, j: int, points_per_unit: int):
        self.j = j
        self.ppu = points_per_unit
        self.M = points_per_unit << (j + 1)
        self.nfft = 2 * self.M
        kernel = eval_H(np.arange(self.M + 1) / points_per_unit)
        spec = np.fft.rfft(kernel, self.nfft)
        period = 1 << (j + 1)
        self.body = spec[: self.M].reshape(self.M // period, period)
        self.last = spec[self.M]

    def path(self, coef: np.ndarray) -> np.ndarray:
        period = 1 << (self.j + 1)
        f = np.fft.fft(coef, n=period)
        acc = np.empty(self.M + 1, dtype=complex)
        acc[: self.M] = (f[None, :] * self.body).reshape(-1)
        acc[self.M] = f[0] * self.last
        out = np.fft.irfft(acc, self.nfft)[: self.M + 1]
        out[0] = 0.0  # H(-2k) = 0 for every k >= 0
        return out


def mc_sup_xk(
    j: int,
    K: ShiftSet,
    points_per_unit: int = 8,
    replicas: int = 2000,
    master_seed: int = 0x5EED_0001,
    workers: int = 1,
) -> McEstimate:
    """Monte Carlo estimate of ``E sup_{[0, 2^{j+1}]} |X_K|`` on a uniform grid."""
    if K.level != j:
        raise ValueError("shift set level does not match j")
    if points_per_unit < 1:
        raise ValueError("points_per_unit must be >= 1")
    stream = GaussianStream(master_seed)
    if len(K) == 0:
        return McEstimate(0.0, 0.0, replicas, stream.master_seed)
    synth = _XkSynthesizer(j, points_per_unit)
    member = np.zeros(1 << j, dtype=bool)
    member[K.K] = True

    def one(r: int) -> np.ndarray:
        xi = stream.normals(r, 1 << j, 1 << j)
        return np.array([np.abs(synth.path(np.where(member, xi, 0.0))).max()])

    samples = run_replicas(one, replicas, workers)[:, 0]
    return McEstimate.from_samples(samples, stream.master_seed)


def tail_level_set(plan: TruncationPlan, j: int, n: int | None = None) -> ShiftSet:
    """Shifts k whose term (j, k) sits at plan position >= n (default 2^{j-1})."""
    if not 1 <= j <= plan.max_level:
        raise ValueError(f"level {j} not in 1..{plan.max_level}")
    if n is None:
        n = 1 << (j - 1)
    pos = plan.positions[(1 << j) : (1 << (j + 1))]
    return ShiftSet(j, np.flatnonzero(pos >= n))
