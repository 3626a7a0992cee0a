"""Command-line front end.

Subcommands::

    rlhaar covariance-check   Parseval sums against the exact covariance
    rlhaar tail-error         Monte Carlo tail sup-norms -> CSV
    rlhaar rate-fit           fit a tail-error CSV -> JSON report
    rlhaar lower-bound        single-level lower-bound pipeline -> JSON
    rlhaar lemma1-audit       harmonic-sum constant audit -> CSV

Exit status: 0 success, 1 usage/config/input error, 2 a checked
guarantee or tolerance failed.  The default seed is 0x5EED0001 unless the
``RLHAAR_SEED`` environment variable overrides it; the seed used is always
echoed in the output.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lower_bound as lb
from .basis import RLParams
from .montecarlo import McEstimate
from .process import (
    DyadicGrid,
    PlanFormatError,
    TruncationPlan,
    basis_covariance,
    exact_covariance,
    mc_tail_curve,
)
from .rates import fit_log_rate, gap_ratio, gap_trend
from .reports import csv_text, curve_from_rows, emit, json_text, parse_tail_csv, tail_rows
from .rng import DEFAULT_SEED

SEED_ENV = "RLHAAR_SEED"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED_CHECK = 2


class ConfigError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return _seed(raw)
    except argparse.ArgumentTypeError as exc:
        raise ConfigError(f"{SEED_ENV}: {exc}") from None


def _seed(text: str) -> int:
    try:
        value = int(text.replace("_", ""), 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


@dataclass
class ExperimentConfig:
    command: str
    alpha: float = 1.5
    max_level: int | None = None
    grid_level: int | None = None
    replicas: int = 2000
    master_seed: int = DEFAULT_SEED
    plan_spec: str = "natural"
    out: str | None = None
    workers: int = 1

    def validate(self) -> None:
        if not (0.5 < self.alpha <= 10.0) or not math.isfinite(self.alpha):
            raise ConfigError("--alpha must lie in (0.5, 10]")
        if self.max_level is not None and not 0 <= self.max_level <= 20:
            raise ConfigError("--max-level must lie in [0, 20]")
        if self.grid_level is not None:
            if not 1 <= self.grid_level <= 24:
                raise ConfigError("--grid-level must lie in [1, 24]")
            if self.max_level is not None and self.grid_level < self.max_level + 2:
                raise ConfigError("--grid-level must be >= --max-level + 2")
        if not 2 <= self.replicas <= 10**7:
            raise ConfigError("--replicas must lie in [2, 1e7]")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")

    def plan(self) -> TruncationPlan:
        """Resolve the plan spec; file errors surface before any computation."""
        spec = self.plan_spec
        if spec.startswith("file:") or (spec not in ("natural", "reversed-levels") and not spec.startswith("random")):
            path = Path(spec[5:] if spec.startswith("file:") else spec)
            try:
                plan = TruncationPlan.read(path)
            except OSError as exc:
                raise ConfigError(f"cannot read plan file {path}: {exc.strerror}") from None
            except PlanFormatError as exc:
                raise ConfigError(f"plan file {path}: {exc}") from None
            if self.max_level is not None and plan.max_level != self.max_level:
                raise ConfigError(
                    f"plan file has max level {plan.max_level}, --max-level says {self.max_level}"
                )
            self.max_level = plan.max_level
            return plan
        if self.max_level is None:
            raise ConfigError("--max-level is required for generated plans")
        if spec == "natural":
            return TruncationPlan.natural(self.max_level)
        if spec == "reversed-levels":
            return TruncationPlan.reversed_levels(self.max_level)
        _, _, seed = spec.partition(":")
        try:
            plan_seed = int(seed, 0) if seed else self.master_seed
        except ValueError:
            raise ConfigError(f"bad random plan seed in {spec!r}") from None
        return TruncationPlan.random(self.max_level, plan_seed)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are config errors: exit 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _points(text: str) -> list[tuple[float, float]]:
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            s, t = (float(v) for v in chunk.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad point {chunk!r}, expected 's,t'") from None
        if not (0 <= s <= 1 and 0 <= t <= 1):
            raise argparse.ArgumentTypeError(f"point {chunk!r} outside [0,1]^2")
        pts.append((s, t))
    if not pts:
        raise argparse.ArgumentTypeError("no points given")
    return pts


def _int_list(text: str) -> list[int]:
    try:
        return [int(v, 0) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _add_common(p: argparse.ArgumentParser, *, mc: bool = True) -> None:
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    if mc:
        p.add_argument("--replicas", type=int, default=2000)
        p.add_argument("--seed", type=_seed, default=None, help=f"master seed (env {SEED_ENV})")
        p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rlhaar", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("covariance-check", help="Parseval partial sums vs exact covariance")
    _add_common(p, mc=False)
    p.add_argument("--max-level", type=int, default=12)
    p.add_argument("--points", type=_points, default=[(1.0, 1.0)], help="'s,t;s,t;...'")
    p.add_argument("--tolerance", type=float, default=1e-3)

    p = sub.add_parser("tail-error", help="Monte Carlo tail sup-norm curve")
    _add_common(p)
    p.add_argument("--max-level", type=int, default=None)
    p.add_argument("--grid-level", type=int, default=None, help="default: max level + 3")
    p.add_argument("--plan", default="natural",
                   help="natural | reversed-levels | random[:SEED] | file:PATH")
    p.add_argument("--cuts", type=_int_list, default=None,
                   help="comma-separated cut positions (default 2^6 .. 2^(J-1))")

    p = sub.add_parser("rate-fit", help="fit n^a (ln n)^beta to a tail-error CSV")
    p.add_argument("input", help="tail-error CSV ('-' for stdin)")
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--fix-power", type=float, default=None, help="default -(alpha - 1/2)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("lower-bound", help="single-level lower-bound pipeline")
    _add_common(p)
    p.add_argument("--level", type=int, required=True, help="even level j")
    p.add_argument("--max-level", type=int, default=None, help="plan max level (default j)")
    p.add_argument("--plan", default="natural")
    p.add_argument("--c-sud", type=float, default=lb.DEFAULT_C_SUD)
    p.add_argument("--points-per-unit", type=int, default=8)
    p.add_argument("--audit-plans", type=int, default=0,
                   help="also audit the structural guarantees on this many random plans")

    p = sub.add_parser("lemma1-audit", help="audit the maximal harmonic-sum constant")
    p.add_argument("--trials", type=int, default=2000, help="random configurations per q")
    p.add_argument("--q-max", type=int, default=64)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--out", default=None)
    return parser


# --------------------------------------------------------------------------
# commands


def cmd_covariance_check(args) -> int:
    cfg = ExperimentConfig("covariance-check", alpha=args.alpha, max_level=args.max_level, out=args.out)
    cfg.validate()
    if not args.tolerance > 0:
        raise ConfigError("--tolerance must be positive")
    params = RLParams(cfg.alpha)
    rows, ok = [], True
    for s, t in args.points:
        exact = exact_covariance(params, s, t)
        partial = basis_covariance(params, s, t, cfg.max_level)
        deficit = exact - partial
        ok &= abs(deficit) <= args.tolerance
        rows.append((s, t, exact, partial, deficit))
    emit(csv_text(("s", "t", "exact", "partial_J", "deficit"), rows), cfg.out)
    return EXIT_OK if ok else EXIT_FAILED_CHECK


def cmd_tail_error(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    cfg = ExperimentConfig(
        "tail-error", alpha=args.alpha, max_level=args.max_level, grid_level=args.grid_level,
        replicas=args.replicas, master_seed=seed, plan_spec=args.plan, out=args.out,
        workers=args.workers,
    )
    cfg.validate()
    plan = cfg.plan()
    cfg.validate()
    J = plan.max_level
    grid = DyadicGrid(cfg.grid_level if cfg.grid_level is not None else J + 3)
    cuts = args.cuts if args.cuts is not None else [1 << e for e in range(6, J)]
    if not cuts:
        raise ConfigError("no cut positions (give --cuts for max level < 7)")
    if any(c < 1 for c in cuts) or sorted(set(cuts)) != list(cuts):
        raise ConfigError("--cuts must be strictly increasing positive integers")
    # Cuts past the end of the plan are empty tails (mean 0).
    inside = [c for c in cuts if c <= plan.n_terms]
    params = RLParams(cfg.alpha)
    est = mc_tail_curve(params, plan, inside, grid, cfg.replicas, seed, cfg.workers) if inside else []
    est = list(est) + [McEstimate(0.0, 0.0, cfg.replicas, seed)] * (len(cuts) - len(inside))
    emit(csv_text(("n", "mean", "std_error", "replicas", "seed"), tail_rows(cuts, est)), cfg.out)
    return EXIT_OK


def rate_report(rows, alpha: float, fix_power: float | None) -> dict:
    params = RLParams(alpha)
    a = -(alpha - 0.5) if fix_power is None else fix_power
    curve, dropped = curve_from_rows(rows, alpha=alpha)
    fit = fit_log_rate(curve, a)
    rho, p = gap_trend(curve, params)
    return {
        "alpha": alpha,
        "a": fit.fix_power,
        "beta": fit.beta,
        "beta_se": fit.beta_se,
        "C": fit.C,
        "log_C": fit.log_C,
        "log_C_se": fit.log_C_se,
        "residual_norm": fit.residual_norm,
        "residual_norm_beta_05": fit.residual_norm_beta_half,
        "residuals": [float(r) for r in fit.residuals],
        "z_beta_05": fit.z_beta_half,
        "beta_05_rejected": bool(fit.beta_half_rejected(3.0)),
        "gap_ratio": [{"n": n, "ratio": r} for n, r in gap_ratio(curve, params)],
        "gap_spearman_rho": rho,
        "gap_spearman_p": p,
        "rows_used": [int(n) for n in curve.n],
        "rows_dropped": dropped,
        "seed": rows[0][1].master_seed,
    }


def cmd_rate_fit(args) -> int:
    if not (0.5 < args.alpha <= 10):
        raise ConfigError("--alpha must lie in (0.5, 10]")
    try:
        text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.input}: {exc.strerror}") from None
    try:
        rows = parse_tail_csv(text)
        report = rate_report(rows, args.alpha, args.fix_power)
    except ValueError as exc:
        raise ConfigError(f"{args.input}: {exc}") from None
    emit(json_text(report), args.out)
    return EXIT_OK


def lower_bound_report(
    j: int,
    plan: TruncationPlan,
    *,
    replicas: int,
    seed: int,
    c_sud: float,
    points_per_unit: int,
    workers: int = 1,
) -> tuple[dict, list[str]]:
    """Run the level-j pipeline on one plan; returns (report, violations)."""
    violations = []
    K = lb.tail_level_set(plan, j)
    if len(K) < 1 << (j - 1):
        violations.append(f"#(K)={len(K)} < 2^(j-1)")
    blocks = lb.select_dense_blocks(j, K)
    if 3 * blocks.m < blocks.width:
        violations.append(f"#(I)={blocks.m} < 2^(j/2)/3")
    seq = lb.construct_separated_sequence(j, K)
    if not seq.degenerate and 4 * seq.m < blocks.width:
        violations.append(f"m={seq.m} < 2^(j/2-2)")
    report = {
        "level": j,
        "plan_max_level": plan.max_level,
        "K_size": len(K),
        "blocks_selected": blocks.m,
        "block_width": blocks.width,
        "degenerate": seq.degenerate,
        "m": seq.m,
        "min_score": seq.min_score,
        "score_over_j": seq.min_score / j,
        "seed": seed,
        "c_sud": c_sud,
    }
    if not seq.degenerate:
        full = lb.construct_separated_sequence(j, lb.ShiftSet.full(j))
        report["full_K_score_over_j"] = full.min_score / j
    report["sudakov_bound"] = lb.sudakov_bound(K, seq.points, c_sud) if seq.m >= 2 else None
    if replicas:
        est = lb.mc_sup_xk(j, K, points_per_unit, replicas, seed, workers)
        report["mc_sup_mean"] = est.mean
        report["mc_sup_std_error"] = est.std_error
        report["replicas"] = est.replicas
        if report["sudakov_bound"] is not None:
            report["sudakov_consistent"] = bool(report["sudakov_bound"] <= est.mean + 3 * est.std_error)
    return report, violations


def cmd_lower_bound(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    j = args.level
    if j < 2 or j % 2:
        raise ConfigError(f"--level must be an even integer >= 2, got {j}")
    if args.c_sud <= 0:
        raise ConfigError("--c-sud must be positive")
    if args.points_per_unit < 8:
        raise ConfigError("--points-per-unit must be >= 8")
    if args.audit_plans < 0:
        raise ConfigError("--audit-plans must be >= 0")
    cfg = ExperimentConfig(
        "lower-bound", alpha=1.5, max_level=args.max_level, replicas=args.replicas,
        master_seed=seed, plan_spec=args.plan, out=args.out, workers=args.workers,
    )
    if cfg.max_level is None and not (args.plan.startswith("file:") or Path(args.plan).is_file()):
        cfg.max_level = j
    cfg.validate()
    plan = cfg.plan()
    if plan.max_level < j:
        raise ConfigError(f"plan max level {plan.max_level} < --level {j}")
    report, violations = lower_bound_report(
        j, plan, replicas=cfg.replicas, seed=seed, c_sud=args.c_sud,
        points_per_unit=args.points_per_unit, workers=cfg.workers,
    )
    audit_violations = 0
    if args.audit_plans:
        rng = np.random.default_rng(seed)
        for _ in range(args.audit_plans):
            rp = TruncationPlan(plan.max_level, rng.permutation(plan.n_terms))
            _, v = lower_bound_report(j, rp, replicas=0, seed=seed, c_sud=args.c_sud,
                                      points_per_unit=args.points_per_unit)
            audit_violations += bool(v)
        report["audit_plans"] = args.audit_plans
        report["audit_violations"] = audit_violations
    report["violations"] = violations
    emit(json_text(report), cfg.out)
    return EXIT_FAILED_CHECK if violations or audit_violations else EXIT_OK


def lemma1_rows(trials: int, q_max: int, seed: int) -> list[tuple]:
    """(q, class, configurations, min ratio, proven floor H_q/ln q) rows."""
    rng = np.random.default_rng(seed)
    rows = []
    q = 2
    while q <= q_max:
        floor = sum(1.0 / i for i in range(1, q + 1)) / math.log(q)
        even = np.arange(2 * q, dtype=float)
        rows.append((q, "equally_spaced", 1, lb.lemma1_ratio(even, 2 * q - 1.0), floor))
        ratios = [lb.lemma1_ratio(_distinct_uniform(rng, 2 * q), 1.0) for _ in range(trials)]
        rows.append((q, "uniform_random", trials, float(min(ratios)), floor))
        q *= 2
    return rows


def _distinct_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    while True:
        pts = np.sort(rng.random(size))
        if np.all(np.diff(pts) > 0):
            return pts


def cmd_lemma1_audit(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.trials < 1 or args.q_max < 2:
        raise ConfigError("--trials must be >= 1 and --q-max >= 2")
    rows = lemma1_rows(args.trials, args.q_max, seed)
    emit(csv_text(("q", "config_class", "configurations", "min_ratio", "proven_floor"), rows), args.out)
    return EXIT_OK if all(r[3] > 0 for r in rows) else EXIT_FAILED_CHECK


COMMANDS = {
    "covariance-check": cmd_covariance_check,
    "tail-error": cmd_tail_error,
    "rate-fit": cmd_rate_fit,
    "lower-bound": cmd_lower_bound,
    "lemma1-audit": cmd_lemma1_audit,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"rlhaar {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
