"""Haar functions and their Riemann-Liouville integrals.

Everything here is a pure function of its arguments and accepts scalars or
numpy arrays for the evaluation point ``t``.

Two kernels carry the critical case alpha = 3/2:

* ``eval_H``: the unscaled integrated Haar shape
  ``H(t) = (t-2)_+^{3/2} - 2 (t-1)_+^{3/2} + t_+^{3/2}``;
* ``integrated_haar``: ``R_alpha h_{j,k}`` for any order alpha > 1/2.

Both are second differences of a plus-power, which cancels catastrophically
far from the support edge (three O(x^alpha) terms summing to
O(x^{alpha-2})).  ``second_difference_power`` switches to a binomial series
in ``h/x`` there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "RLParams",
    "BasisIndex",
    "DRIFT",
    "gamma_fn",
    "eval_haar",
    "eval_H",
    "eval_H_asymptotic",
    "second_difference_power",
    "integrated_haar",
    "integrated_haar_level",
    "drift_term",
    "GAMMA_5_2",
]

GAMMA_5_2 = 3.0 * math.sqrt(math.pi) / 4.0

# Series branch is used when h/x <= _SERIES_SWITCH; (2u)^n <= 8^-n there.
_SERIES_SWITCH = 1.0 / 16.0
_SERIES_TERMS = 22


def gamma_fn(x: float) -> float:
    """Gamma function, exact (up to rounding) on integers and half-integers.

    Half-integers use ``Gamma(n + 1/2) = sqrt(pi) * prod_{i<n} (i + 1/2)``;
    other arguments fall back to ``math.gamma`` (a few ulp accurate).
    """
    twice = 2.0 * x
    if x > 0 and twice == round(twice) and twice < 341:
        n2 = int(round(twice))
        if n2 % 2 == 0:
            return float(math.factorial(n2 // 2 - 1))
        value = math.sqrt(math.pi)
        for i in range(n2 // 2):
            value *= i + 0.5
        return value
    return math.gamma(x)


@dataclass(frozen=True)
class RLParams:
    """Order of the Riemann-Liouville process with cached Gamma values."""

    alpha: float
    gamma_alpha: float = field(init=False, repr=False)
    gamma_alpha_plus_1: float = field(init=False, repr=False)

    def __post_init__(self):
        alpha = float(self.alpha)
        if not alpha > 0.5 or not math.isfinite(alpha):
            raise ValueError(f"alpha must be a finite number > 1/2, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma_alpha", gamma_fn(alpha))
        object.__setattr__(self, "gamma_alpha_plus_1", gamma_fn(alpha + 1.0))

    @property
    def is_critical(self) -> bool:
        return self.alpha == 1.5


@dataclass(frozen=True, order=True)
class BasisIndex:
    """One term of the Haar expansion.

    ``j == -1`` is the drift term ``t^alpha / Gamma(alpha + 1)``, whose
    coefficient is conventionally indexed by -1; otherwise ``(j, k)`` is a Haar pair with
    ``0 <= k < 2**j``.  ``code`` is a dense integer key: drift -> 0,
    ``(j, k) -> 2**j + k``.
    """

    j: int
    k: int = 0

    def __post_init__(self):
        if self.j == -1:
            if self.k != 0:
                raise ValueError("drift index carries no shift")
            return
        if self.j < 0:
            raise ValueError(f"level must be >= 0 (or -1 for drift), got {self.j}")
        if not 0 <= self.k < (1 << self.j):
            raise ValueError(f"shift k={self.k} out of range for level j={self.j}")

    @classmethod
    def drift(cls) -> "BasisIndex":
        return cls(-1, 0)

    @property
    def is_drift(self) -> bool:
        return self.j == -1

    @property
    def code(self) -> int:
        return 0 if self.j == -1 else (1 << self.j) + self.k

    @classmethod
    def from_code(cls, code: int) -> "BasisIndex":
        if code < 0:
            raise ValueError("codes are non-negative")
        if code == 0:
            return cls(-1, 0)
        j = int(code).bit_length() - 1
        return cls(j, code - (1 << j))

    def __str__(self) -> str:
        return "drift" if self.is_drift else f"{self.j} {self.k}"


DRIFT = BasisIndex.drift()


def _check_pair(j: int, k: int) -> None:
    # Reuses the index validation.
    BasisIndex(int(j), int(k))
    if j < 0:
        raise ValueError("Haar functions need j >= 0")


def eval_haar(j: int, k: int, t):
    """Haar function h_{j,k} on half-open dyadic intervals.

    ``2^{j/2}`` on ``[2k, 2k+1) / 2^{j+1}``, ``-2^{j/2}`` on
    ``[2k+1, 2k+2) / 2^{j+1}``, zero elsewhere; in particular zero at t = 1.
    """
    _check_pair(j, k)
    t = np.asarray(t, dtype=float)
    scaled = t * float(1 << (j + 1)) - 2 * k
    amp = 2.0 ** (j / 2)
    out = np.where((scaled >= 0) & (scaled < 1), amp, 0.0)
    out = np.where((scaled >= 1) & (scaled < 2), -amp, out)
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _series_coefficients(alpha: float) -> np.ndarray:
    # c_n = binom(alpha, n) (-1)^n (2^n - 2), n = 2 .. N; n = 0, 1 vanish.
    coefs = []
    binom = 1.0
    for n in range(1, _SERIES_TERMS + 1):
        binom *= (alpha - n + 1) / n
        if n >= 2:
            coefs.append(binom * (-1.0) ** n * (2.0**n - 2.0))
    return np.array(coefs)


def second_difference_power(x, h: float, alpha: float):
    """``x_+^a - 2 (x-h)_+^a + (x-2h)_+^a`` with a = alpha, without cancellation.

    For ``h / x <= 1/16`` uses ``x^a * sum_{n>=2} c_n (h/x)^n``; elsewhere
    the three terms are summed directly (cancellation costs at most a factor
    ~256 there).
    """
    x = np.asarray(x, dtype=float)
    direct = (
        np.maximum(x, 0.0) ** alpha
        - 2.0 * np.maximum(x - h, 0.0) ** alpha
        + np.maximum(x - 2.0 * h, 0.0) ** alpha
    )
    far = x * _SERIES_SWITCH >= h
    if np.any(far):
        xf = x[far] if x.ndim else x
        u = h / xf
        acc = np.zeros_like(u)
        for c in _series_coefficients(float(alpha))[::-1]:
            acc = acc * u + c
        acc *= u * u
        series = xf**alpha * acc
        if x.ndim:
            direct[far] = series
        else:
            direct = series
    return direct[()] if np.ndim(direct) == 0 else direct


def eval_H(t):
    """Unscaled critical-case kernel H; zero for t <= 0."""
    return second_difference_power(t, 1.0, 1.5)


def eval_H_asymptotic(t):
    """Leading asymptotic ``0.75 / sqrt(t)`` of H, valid for t >= 2."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 2):
        raise ValueError("asymptotic form of H is only stated for t >= 2")
    out = 0.75 / np.sqrt(t)
    return out[()] if out.ndim == 0 else out


def integrated_haar(params: RLParams, j: int, k: int, t):
    """``(R_alpha h_{j,k})(t)`` from the three-term plus-power formula."""
    _check_pair(j, k)
    t = np.asarray(t, dtype=float)
    scale = float(1 << (j + 1))
    x = t - 2 * k / scale
    out = (2.0 ** (j / 2) / params.gamma_alpha_plus_1) * second_difference_power(
        x, 1.0 / scale, params.alpha
    )
    return out


def integrated_haar_level(params: RLParams, j: int, t) -> np.ndarray:
    """All ``R_alpha h_{j,k}``, k = 0..2^j-1, at points t; shape (2^j, len(t))."""
    if j < 0:
        raise ValueError("level must be >= 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    scale = float(1 << (j + 1))
    ks = np.arange(1 << j)
    x = t[None, :] - (2 * ks[:, None]) / scale
    return (2.0 ** (j / 2) / params.gamma_alpha_plus_1) * second_difference_power(
        x, 1.0 / scale, params.alpha
    )


def drift_term(params: RLParams, t):
    """Coefficient function of the leading Gaussian term, t^alpha / Gamma(alpha+1)."""
    t = np.asarray(t, dtype=float)
    out = np.maximum(t, 0.0) ** params.alpha / params.gamma_alpha_plus_1
    return out[()] if out.ndim == 0 else out
