"""Accuracy statistics and real-root histograms for the three platform variants.

Writes one directory of CSV files per variant under --out.
"""
import argparse
import json
from pathlib import Path

from sgpfk.experiments import TrialConfig, run_accuracy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--variants", nargs="+", default=["66", "65", "6p6"])
    ap.add_argument("--out", default="results/accuracy")
    args = ap.parse_args()
    for v in args.variants:
        out = Path(args.out) / v
        s = run_accuracy(TrialConfig(variant=v, trials=args.trials, seed=args.seed), out=out)
        report = {k: s[k] for k in s if k not in ("records", "failure_list")}
        print(v, json.dumps(report))


if __name__ == "__main__":
    main()
