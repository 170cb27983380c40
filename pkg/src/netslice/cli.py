"""Command line runner: ``netslice <command> --config PATH --seed N --trials N --out DIR``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from .config import ConfigError, ScenarioConfig, load_config
from .core import McPlan
from .embb import orth_rate
from .mmtc import max_arrival_orth
from .output import (CSV_NAMES, header_lines, plot_region, version, write_curve, write_manifest,
                     write_table)
from .region import RegionCurve, Scheme
from .urllc import TrialBudgetError, max_rate

log = logging.getLogger("netslice")

COMMANDS = ("embb-urllc-region", "embb-mmtc-region", "single-service", "validate")
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(float(text)) if "e" in text.lower() else int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="netslice", description="Rate regions for sliced eMBB/URLLC/mMTC uplinks.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="key=value scenario file (not needed for validate)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--trials", type=_positive, default=None,
                   help="Monte Carlo trials (default 1e6, or 1e8 when eps_u < 1e-3)")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--plots", action="store_true", help="also write an SVG of the region")
    p.add_argument("--fast", action="store_true", help="use eps_u=1e-3 for a quick run")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--points", type=_positive, default=None, help="rate grid size")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def default_trials(cfg: ScenarioConfig | None) -> int:
    if cfg is not None and cfg.eps_u < 1e-3:
        return 10**8
    return 10**6


def _empty(scheme: Scheme) -> RegionCurve:
    return RegionCurve(scheme)


def run_embb_urllc(cfg, plan, args, header) -> list[Path]:
    from .slicing_embb_urllc import InfeasibleError, UrllcContext, default_urllc_grid, oma_region, region_noma

    ctx = UrllcContext(cfg, plan)
    oma = oma_region(cfg, plan, ctx)
    grid = default_urllc_grid(ctx, args.points) if args.points else default_urllc_grid(ctx)
    try:
        sic, pun, lb = region_noma(cfg, plan, grid, ctx)
    except InfeasibleError as exc:
        log.warning("WARN infeasible scenario: %s", exc)
        print(f"WARN infeasible scenario: {exc}", file=sys.stderr)
        sic, pun, lb = (_empty(s) for s in (Scheme.H_NOMA_SIC, Scheme.H_NOMA_PUNCTURE, Scheme.APPENDIX_A_LB))
    curves = [oma, sic, pun, lb]
    paths = [write_curve(args.out / CSV_NAMES[c.scheme], c, header, "r_b_sum", "r_u") for c in curves]
    if args.plots:
        paths.append(plot_region(args.out / "region.svg", curves, "eMBB sum-rate r_B [bits/symbol]",
                                 "URLLC rate r_U [bits/symbol]"))
    return paths


def run_embb_mmtc(cfg, plan, args, header) -> list[Path]:
    from .slicing_embb_mmtc import default_rate_grid, region_embb_mmtc

    grid = default_rate_grid(cfg, args.points) if args.points else None
    region = region_embb_mmtc(cfg, plan, grid)
    notes = [f"r_b_low={region.r_b_low!r}", f"lam_lb={region.lam_lb!r}", f"lam_ub={region.lam_ub!r}"]
    curves = [region.oma, region.noma, region.lower, region.upper]
    if all(len(c) == 0 or max(c.ys) == 0 for c in curves):
        print("WARN infeasible scenario: no positive arrival rate meets eps_m", file=sys.stderr)
    paths = [write_curve(args.out / CSV_NAMES[c.scheme], c, header, "r_b", "lambda_m", notes) for c in curves]
    if args.plots:
        paths.append(plot_region(args.out / "region.svg", curves, "eMBB rate r_B [bits/symbol]",
                                 "mMTC arrival rate lambda_M [devices/slot]"))
    return paths


def run_single_service(cfg, plan, args, header) -> list[Path]:
    rows = [("embb", "orth_rate", 1, orth_rate(cfg.gamma_b, cfg.eps_b))]
    for f_u in range(1, cfg.f + 1):
        rows.append(("urllc", "max_rate", f_u, max_rate(f_u, cfg.gamma_u, cfg.eps_u, None, plan)))
    lam = max_arrival_orth(cfg.r_m, cfg.eps_m, cfg.gamma_m, plan)
    if lam is None:
        print("WARN mMTC target unreachable even for a lone device", file=sys.stderr)
    rows.append(("mmtc", "max_arrival", 1, lam))
    return [write_table(args.out / "single_service.csv", ["service", "quantity", "channels", "value"],
                        rows, header)]


RUNNERS = {
    "embb-urllc-region": run_embb_urllc,
    "embb-mmtc-region": run_embb_mmtc,
    "single-service": run_single_service,
}


def run(args: argparse.Namespace) -> int:
    if args.command == "validate":
        from .validation import run_checks

        checks = run_checks(McPlan(args.trials or 10**6, args.seed, workers=args.workers))
        for c in checks:
            print(c.line())
        return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
    if args.config is None:
        raise UsageError(f"{args.command} needs --config")
    cfg = load_config(args.config)
    if args.fast:
        cfg = cfg.fast_variant()
    trials = args.trials or default_trials(cfg)
    plan = McPlan(trials, args.seed, workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    header = header_lines(cfg, args.seed, trials, args.command, version())
    start = time.perf_counter()
    paths = RUNNERS[args.command](cfg, plan, args, header)
    write_manifest(args.out, {
        "command": args.command, "config_path": str(args.config), "seed": args.seed, "trials": trials,
        "workers": args.workers, "fast": bool(args.fast), "plots": bool(args.plots),
        "wall_time_s": round(time.perf_counter() - start, 3), "files": [p.name for p in paths],
        "version": version(),
    })
    for p in paths:
        print(p)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (UsageError, ConfigError, TrialBudgetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
