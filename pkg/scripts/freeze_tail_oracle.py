"""Independent Monte Carlo oracle for E sup |tail| (alpha=3/2, natural order).

Direct summation of integrated Haar functions on the grid (dense matrix
products per level) with numpy's default PCG64 normals, so it shares
neither the FFT synthesis nor the Philox stream with the code under test.
Writes tests/data/tail_oracle.json.

    python scripts/freeze_tail_oracle.py [--replicas 1000] [--seed 20240101]
"""

import argparse
import json
from pathlib import Path

import numpy as np

from rlhaar.basis import RLParams, drift_term, integrated_haar_level


def direct_tail_sups(alpha, J, grid_level, n, replicas, seed, chunk=4097):
    params = RLParams(alpha)
    t = np.arange((1 << grid_level) + 1) / float(1 << grid_level)
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((replicas, 1 << (J + 1)))
    # natural order: code c sits at position c + 1
    keep = np.arange(1 << (J + 1)) + 1 >= n
    xi = np.where(keep, xi, 0.0)
    paths = np.outer(xi[:, 0], drift_term(params, t))
    for j in range(J + 1):
        lo, hi = 1 << j, 1 << (j + 1)
        if not keep[lo:hi].any():
            continue
        for s in range(0, t.size, chunk):
            phi = integrated_haar_level(params, j, t[s : s + chunk])
            paths[:, s : s + chunk] += xi[:, lo:hi] @ phi
    return np.abs(paths).max(axis=1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicas", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--out", default=str(Path(__file__).parents[1] / "tests/data/tail_oracle.json"))
    args = ap.parse_args()
    cfg = dict(alpha=1.5, J=12, grid_level=15, n=64)
    sups = direct_tail_sups(**cfg, replicas=args.replicas, seed=args.seed)
    record = dict(cfg, replicas=args.replicas, seed=args.seed, rng="numpy PCG64 standard_normal",
                  mean=float(sups.mean()), std_error=float(sups.std(ddof=1) / np.sqrt(sups.size)))
    Path(args.out).write_text(json.dumps(record, indent=2) + "\n")
    print(json.dumps(record, indent=2))


if __name__ == "__main__":
    main()
