"""Haar series of the Riemann-Liouville process: kernels, simulation,
lower-bound constructions and rate fits."""

from .basis import DRIFT, BasisIndex, RLParams, drift_term, eval_H, eval_haar, integrated_haar
from .montecarlo import McEstimate
from .process import DyadicGrid, TruncationPlan, mc_tail_curve, mc_tail_error
from .rng import GaussianStream

__all__ = [
    "DRIFT",
    "BasisIndex",
    "RLParams",
    "drift_term",
    "eval_H",
    "eval_haar",
    "integrated_haar",
    "McEstimate",
    "DyadicGrid",
    "TruncationPlan",
    "mc_tail_curve",
    "mc_tail_error",
    "GaussianStream",
]
