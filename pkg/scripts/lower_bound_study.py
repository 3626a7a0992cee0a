"""Expected sup of X_K against level j, with the Sudakov minorant.

    python3 scripts/lower_bound_study.py --levels 8,10,12 --replicas 500

For each even level, K is a random half-density shift set.  Output is CSV:
level, #K, m, min score / j, Sudakov bound, MC mean and standard error.
"""

import argparse

import numpy as np

from rlhaar.lower_bound import ShiftSet, construct_separated_sequence, mc_sup_xk, sudakov_bound
from rlhaar.reports import csv_text, emit
from rlhaar.rng import DEFAULT_SEED


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--levels", default="8,10,12,14")
    ap.add_argument("--replicas", type=int, default=500)
    ap.add_argument("--density", type=float, default=0.5)
    ap.add_argument("--c-sud", type=float, default=0.2)
    ap.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for j in (int(v) for v in args.levels.split(",")):
        size = max(1 << (j - 1), int(round(args.density * (1 << j))))
        K = ShiftSet.random(j, size, rng)
        seq = construct_separated_sequence(j, K)
        sud = sudakov_bound(K, seq.points, args.c_sud) if seq.m >= 2 else 0.0
        est = mc_sup_xk(j, K, replicas=args.replicas, master_seed=args.seed)
        rows.append((j, len(K), seq.m, seq.min_score / j, sud, est.mean, est.std_error))
    header = ("level", "K_size", "m", "score_over_j", "sudakov", "mc_mean", "mc_std_error")
    emit(csv_text(header, rows), args.out)


if __name__ == "__main__":
    main()
