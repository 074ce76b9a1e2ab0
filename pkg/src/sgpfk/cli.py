"""Command-line front end: solve, synth, noise, bench, verify-structure.

Exit codes: 0 success, 2 invalid input, 3 degenerate instance, 4 template
structure inconsistency.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

from . import experiments as ex
from .errors import InputValidationError, SGPError
from .io import (
    SOLUTION_CSV_HEADER,
    dumps_json,
    load_geometry,
    load_lengths,
    solution_csv_rows,
    solution_to_dict,
)
from .pencil import forward_kinematics
from .polynomial import parse_monomial
from .structure import TEMPLATE_DIMENSIONS, BASIC_TAIL, SHIFT_SIZES, build_structure, describe


def _cmd_solve(args) -> int:
    geom, L = load_geometry(args.geometry)
    if args.lengths is not None:
        L = load_lengths(args.lengths)
    if L is None:
        raise InputValidationError("no squared leg lengths: pass --lengths or put 'L' in the geometry file")
    sol = forward_kinematics(geom, L)
    if args.csv:
        w = csv.writer(sys.stdout)
        w.writerow(SOLUTION_CSV_HEADER)
        for row in solution_csv_rows(sol, args.all_complex):
            w.writerow([ex.fmt_value(v) for v in row])
    else:
        print(dumps_json(solution_to_dict(sol, args.all_complex)))
    return 0


def _cmd_synth(args) -> int:
    config = ex.TrialConfig(variant=args.variant, trials=args.trials, seed=args.seed, mode=args.mode)
    summary = ex.run_accuracy(config, out=args.out)
    report = {k: v for k, v in summary.items() if k not in ("records", "failure_list")}
    print(dumps_json(report))
    return 0


def _cmd_noise(args) -> int:
    config = ex.TrialConfig(variant=args.variant, trials=args.trials, seed=args.seed,
                            mode=ex.LengthMode.FROM_POSE)
    rows = ex.run_noise(config, ex.sigma_grid(args.sigma_max, args.steps), out=args.out)
    print("sigma,no_real_roots,failures,median_eps_R,median_eps_t,outliers_eps_R,outliers_eps_t")
    for r in rows:
        print(",".join(ex.fmt_value(v) for v in (
            r["sigma"], r["no_real_roots"], r["failures"], r["eps_R"]["median"], r["eps_t"]["median"],
            len(r["eps_R"]["outliers"]), len(r["eps_t"]["outliers"]))))
    return 0


def _cmd_bench(args) -> int:
    res = ex.run_bench(repeats=args.repeats, seed=args.seed, variant=args.variant)
    print(f"# {res['repeats']} solves, {res['failures']} failures; times in ms")
    print("stage,mean_ms,median_ms,fraction_of_total")
    for stage, row in res["stages"].items():
        print(",".join([stage] + [ex.fmt_value(row["mean"] * 1e3), ex.fmt_value(row["median"] * 1e3),
                                  ex.fmt_value(row["fraction"])]))
    print(f"# largest stage: {res['largest_stage']}")
    return 0


def _cmd_verify(args) -> int:
    t0 = time.perf_counter()
    structure = build_structure()
    elapsed = time.perf_counter() - t0
    info = describe(structure)
    checks = {
        "shift_set_sizes": info["shift_set_sizes"] == list(SHIFT_SIZES),
        "template_shape": info["template_shape"] == [TEMPLATE_DIMENSIONS["rows"], TEMPLATE_DIMENSIONS["columns"]],
        "reduced_shape": info["reduced_shape"] == [TEMPLATE_DIMENSIONS["reduced_rows"],
                                                   TEMPLATE_DIMENSIONS["reduced_columns"]],
        "block_sizes": [info["block_sizes"][k] for k in "ERB"] == [
            TEMPLATE_DIMENSIONS["excessive"], TEMPLATE_DIMENSIONS["reducible"], TEMPLATE_DIMENSIONS["basic"]],
        "basic_tail": structure.basic[-len(BASIC_TAIL):] == tuple(parse_monomial(m) for m in BASIC_TAIL),
    }
    report = {k: info[k] for k in ("shift_set_sizes", "template_shape", "reduced_shape", "block_sizes",
                                   "basic_tail", "full_support_size", "redundant_columns",
                                   "m0_degree_in_L1")}
    if args.full:
        report = info
    report["checks"] = checks
    report["build_seconds"] = elapsed
    print(dumps_json(report))
    if not all(checks.values()):
        return 4
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sgpfk", description="Forward kinematics of general Stewart-Gough platforms.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance from a JSON geometry file")
    p.add_argument("--geometry", required=True, help="JSON with 'top', 'base' (6x3), optional 'variant', 'L'")
    p.add_argument("--lengths", help="JSON list of six squared leg lengths (or {'L': [...]})")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON output (default)")
    fmt.add_argument("--csv", action="store_true", help="CSV output")
    p.add_argument("--all-complex", action="store_true", help="report all 40 roots, not only real ones")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("synth", help="accuracy statistics over synthetic instances")
    p.add_argument("--variant", default="66", choices=["66", "65", "6p6"])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="uniform", choices=["uniform", "pose"])
    p.add_argument("--out", required=True, help="output directory for CSV files")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("noise", help="pose errors against leg length noise")
    p.add_argument("--variant", default="66", choices=["66", "65", "6p6"])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--sigma-max", type=float, default=ex.SIGMA_MAX)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("bench", help="per-stage timing")
    p.add_argument("--repeats", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", default="66", choices=["66", "65", "6p6"])
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify-structure", help="build and check the template skeleton")
    p.add_argument("--full", action="store_true", help="dump every monomial list too")
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SGPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
