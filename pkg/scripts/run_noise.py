"""Rotation and translation errors against leg-length noise, boxplot-ready CSV per variant."""
import argparse
from pathlib import Path

from sgpfk.experiments import LengthMode, TrialConfig, run_noise, sigma_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigma-max", type=float, default=8e-4)
    ap.add_argument("--steps", type=int, default=9)
    ap.add_argument("--variants", nargs="+", default=["66", "65", "6p6"])
    ap.add_argument("--out", default="results/noise")
    args = ap.parse_args()
    grid = sigma_grid(args.sigma_max, args.steps)
    for v in args.variants:
        config = TrialConfig(variant=v, trials=args.trials, seed=args.seed, mode=LengthMode.FROM_POSE)
        rows = run_noise(config, grid, out=Path(args.out) / v)
        for r in rows:
            print(f"{v} sigma={r['sigma']:.1e} median eps_R={r['eps_R']['median']:.3e} "
                  f"eps_t={r['eps_t']['median']:.3e} no_real={r['no_real_roots']} failures={r['failures']}")


if __name__ == "__main__":
    main()
