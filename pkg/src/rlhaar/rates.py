"""Rate exponents of tail-error curves.

Curves are modelled as ``e_n = C n^a (ln n)^beta`` with the power ``a``
held fixed (default ``-(alpha - 1/2)``) and ``(log C, beta)`` fitted by
weighted least squares on ``log e_n``.  The weight of a row is the inverse
squared relative Monte Carlo error (delta method: ``sd(log e) ~ se / e``).
The parameter covariance is ``(X^T W X)^{-1}`` without rescaling by the
residual variance, so it reflects Monte Carlo noise only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .basis import RLParams
from .montecarlo import McEstimate

__all__ = [
    "RateCurve",
    "RateFit",
    "optimal_rate",
    "fit_log_rate",
    "gap_ratio",
    "gap_trend",
]


def optimal_rate(params: RLParams, n: float) -> float:
    """Known order of the approximation numbers, ``n^{-(alpha-1/2)} sqrt(ln n)``."""
    if n < 2:
        raise ValueError("optimal_rate needs n >= 2")
    return n ** -(params.alpha - 0.5) * math.sqrt(math.log(n))


@dataclass(frozen=True)
class RateCurve:
    n: np.ndarray
    estimates: tuple[McEstimate, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float).reshape(-1)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "estimates", tuple(self.estimates))
        if n.size != len(self.estimates):
            raise ValueError("one estimate per cut is required")
        if np.any(np.diff(n) <= 0):
            raise ValueError("cuts must be strictly increasing")
        if np.any(self.means <= 0):
            raise ValueError("rate curves need positive estimates")

    @property
    def means(self) -> np.ndarray:
        return np.array([e.mean for e in self.estimates])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([e.std_error for e in self.estimates])

    @classmethod
    def from_values(cls, n: Sequence[float], values: Sequence[float], rel_error: float = 0.01, **metadata):
        """Synthetic curve with a constant relative standard error."""
        values = np.asarray(values, dtype=float)
        est = [McEstimate(float(v), float(v * rel_error), 2, 0) for v in values]
        return cls(np.asarray(n, dtype=float), est, dict(metadata))


@dataclass(frozen=True)
class RateFit:
    fix_power: float
    beta: float
    log_C: float
    beta_se: float
    log_C_se: float
    covariance: np.ndarray
    residual_norm: float
    residual_norm_beta_half: float
    residuals: np.ndarray

    @property
    def C(self) -> float:
        return math.exp(self.log_C)

    @property
    def z_beta_half(self) -> float:
        """Distance of beta from 1/2 in standard errors."""
        return (self.beta - 0.5) / self.beta_se if self.beta_se > 0 else math.inf

    def beta_half_rejected(self, sigmas: float = 3.0) -> bool:
        return abs(self.z_beta_half) > sigmas

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return np.exp(self.log_C + self.fix_power * np.log(n) + self.beta * np.log(np.log(n)))


def _weights(curve: RateCurve) -> np.ndarray:
    rel = curve.std_errors / curve.means
    if np.all(rel == 0):
        return np.ones_like(rel)
    if np.any(rel <= 0):
        raise ValueError("standard errors must be all positive or all zero")
    return rel**-2


def fit_log_rate(curve: RateCurve, fix_power: float) -> RateFit:
    """Weighted fit of ``log e_n - a log n = log C + beta log log n``."""
    n = curve.n
    if n.size < 4:
        raise ValueError("need at least 4 rows to fit")
    if np.any(n < 3):
        raise ValueError("all cuts must be >= 3 (log log n > 0)")
    y = np.log(curve.means) - fix_power * np.log(n)
    X = np.column_stack([np.ones_like(n), np.log(np.log(n))])
    w = _weights(curve)
    A = X.T @ (w[:, None] * X)
    if np.linalg.matrix_rank(A) < 2 or np.linalg.cond(A) > 1e14:
        raise ValueError("degenerate design matrix")
    cov = np.linalg.inv(A)
    coef = cov @ (X.T @ (w * y))
    resid = y - X @ coef
    # Restricted model beta = 1/2: only log C is fitted.
    y_half = y - 0.5 * X[:, 1]
    c_half = np.sum(w * y_half) / np.sum(w)
    resid_half = y_half - c_half
    return RateFit(
        fix_power=float(fix_power),
        beta=float(coef[1]),
        log_C=float(coef[0]),
        beta_se=float(math.sqrt(cov[1, 1])),
        log_C_se=float(math.sqrt(cov[0, 0])),
        covariance=cov,
        residual_norm=float(math.sqrt(np.sum(w * resid**2))),
        residual_norm_beta_half=float(math.sqrt(np.sum(w * resid_half**2))),
        residuals=resid,
    )


def gap_ratio(curve: RateCurve, params: RLParams) -> list[tuple[float, float]]:
    """``(n, e_n / optimal_rate(n))`` rows."""
    return [(float(n), float(e / optimal_rate(params, n))) for n, e in zip(curve.n, curve.means)]


def gap_trend(curve: RateCurve, params: RLParams) -> tuple[float, float]:
    """Spearman correlation of the gap ratio with n and its one-sided p-value."""
    ratios = np.array([r for _, r in gap_ratio(curve, params)])
    if np.ptp(ratios) <= 1e-12 * np.max(np.abs(ratios)):
        return 0.0, 1.0  # flat ratio: no trend
    res = stats.spearmanr(curve.n, ratios, alternative="greater")
    rho = float(res.statistic)
    p = float(res.pvalue)
    return rho, p
