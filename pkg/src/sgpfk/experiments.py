"""Synthetic trials, accuracy and noise statistics, stage benchmarks and CSV output."""
from __future__ import annotations

import csv
import enum
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInstanceError, InputValidationError
from .kinematics import (
    LegMeasurements,
    PlatformGeometry,
    Pose,
    Variant,
    coefficient_map,
    leg_lengths_from_pose,
)
from .pencil import SolutionSet, forward_kinematics
from .structure import default_structure

SIGMA_MAX = 8e-4
STAGES = ("template", "plu", "qz", "filter", "total")
QUANTILE_METHOD = "midpoint"
STATS_NOTE = "quantiles are midpoint-interpolated order statistics (numpy method='midpoint')"


class LengthMode(enum.Enum):
    UNIFORM_SQUARED = "uniform"
    FROM_POSE = "pose"


@dataclass(frozen=True)
class TrialConfig:
    variant: Variant = Variant.GENERAL_66
    trials: int = 1000
    seed: int = 0
    mode: LengthMode = LengthMode.UNIFORM_SQUARED
    sigma: float = 0.0
    lo: float = 0.5
    hi: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "mode", LengthMode(self.mode))
        if self.trials < 1:
            raise InputValidationError("trial count must be at least 1")
        if not self.sigma >= 0:
            raise InputValidationError("sigma must be nonnegative")
        if not self.lo < self.hi:
            raise InputValidationError("length bounds need lo < hi")
        if not 0 <= self.seed < 2**64:
            raise InputValidationError("seed must fit in 64 unsigned bits")


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for a trial (and optional sub-stream) index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def gen_geometry(variant, rng: np.random.Generator) -> PlatformGeometry:
    variant = Variant.parse(variant)
    top = np.zeros((6, 3))
    base = np.zeros((6, 3))
    top[1:] = rng.uniform(-2.0, 2.0, (5, 3))
    base[1:] = rng.uniform(-2.0, 2.0, (5, 3))
    if variant is Variant.COINCIDENT_65:
        top[5] = top[4]
    elif variant is Variant.SEMIPLANAR_6P6:
        base[:, 2] = 0.0
    return PlatformGeometry(top, base, variant)


def gen_lengths(geom: PlatformGeometry, mode, rng: np.random.Generator,
                lo: float = 0.5, hi: float = 3.0) -> tuple[LegMeasurements, Pose | None]:
    mode = LengthMode(mode)
    if mode is LengthMode.UNIFORM_SQUARED:
        return LegMeasurements(rng.uniform(lo, hi, 6)), None
    pose = Pose(rng.standard_normal(3), rng.standard_normal(3))
    return leg_lengths_from_pose(geom, pose), pose


def perturb_lengths(L: LegMeasurements, sigma: float, rng: np.random.Generator) -> LegMeasurements:
    """Multiply each squared length by (1 + s)^2 with s = sigma * z, z ~ N(0, 1), redrawing s <= -1.

    The same ``rng`` state gives the same z for every sigma, so a sweep that
    reseeds per trial moves each instance along one noise direction.
    """
    if sigma < 0:
        raise InputValidationError("sigma must be nonnegative")
    if sigma == 0:
        return LegMeasurements(L.squared_lengths.copy())
    z = rng.standard_normal(6)
    bad = sigma * z <= -1.0
    while np.any(bad):
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = sigma * z <= -1.0
    return LegMeasurements(L.squared_lengths * (1.0 + sigma * z) ** 2)


def error_metric(solution: SolutionSet) -> float:
    """Half the log10 of the summed squared residuals of the accepted roots."""
    r = np.asarray(solution.residuals, dtype=float)
    with np.errstate(divide="ignore"):
        return float(0.5 * np.log10(np.sum(r * r)))


def rotation_angle(Ra: np.ndarray, Rb: np.ndarray) -> float:
    c = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def direction_angle(a: np.ndarray, b: np.ndarray) -> float:
    c = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def pose_errors(solution: SolutionSet, gt: Pose) -> tuple[float, float] | None:
    """(rotation error, translation direction error) in radians, each minimised over real roots.

    None when the solution has no real root.
    """
    poses = solution.real_poses
    if not poses:
        return None
    Rg = gt.rotation
    eR = min(rotation_angle(p.rotation, Rg) for p in poses)
    et = min(direction_angle(p.t, gt.t) for p in poses)
    return eR, et


@dataclass
class TrialRecord:
    trial: int
    variant: str
    sigma: float
    epsilon: float
    n_real: int
    gap: float
    eps_R: float = float("nan")
    eps_t: float = float("nan")
    timings: dict = field(default_factory=dict)

    def row(self) -> list:
        return [self.trial, self.variant, self.sigma, self.epsilon, self.n_real, self.gap,
                self.eps_R, self.eps_t] + [self.timings.get(s, float("nan")) for s in STAGES]

    @staticmethod
    def header() -> list:
        return ["trial", "variant", "sigma", "epsilon", "n_real", "gap", "eps_R", "eps_t"] + \
            [f"t_{s}" for s in STAGES]


@dataclass
class Failure:
    trial: int
    sigma: float
    stage: str | None
    message: str


def run_trial(config: TrialConfig, trial: int, sigma: float = 0.0, structure=None) -> TrialRecord:
    """One seeded instance; instance and noise direction are shared across sigma."""
    rng = trial_rng(config.seed, trial)
    geom = gen_geometry(config.variant, rng)
    L, gt = gen_lengths(geom, config.mode, rng, config.lo, config.hi)
    if sigma > 0:
        L = perturb_lengths(L, sigma, trial_rng(config.seed, trial, 1))
    sol = forward_kinematics(geom, L, structure=structure)
    rec = TrialRecord(trial, config.variant.value, sigma, error_metric(sol), sol.n_real, sol.gap,
                      timings=dict(sol.timings))
    if gt is not None:
        errs = pose_errors(sol, gt)
        if errs is not None:
            rec.eps_R, rec.eps_t = errs
    return rec


def warm_caches():
    """Build the shared template skeleton and coefficient map before anything is timed."""
    coefficient_map()
    return default_structure()


def _run(config: TrialConfig, sigma: float):
    structure = warm_caches()
    records, failures = [], []
    for k in range(config.trials):
        try:
            records.append(run_trial(config, k, sigma, structure))
        except DegenerateInstanceError as exc:
            failures.append(Failure(k, sigma, exc.stage, str(exc)))
    return records, failures


def quantile(x, q) -> float:
    return float(np.quantile(np.asarray(x, dtype=float), q, method=QUANTILE_METHOD))


def accuracy_summary(records: list[TrialRecord], failures: list[Failure]) -> dict:
    eps = np.array([r.epsilon for r in records])
    gap = np.array([r.gap for r in records])
    counts = np.array([r.n_real for r in records], dtype=int)
    hist = {int(k): int(v) for k, v in zip(*np.unique(counts, return_counts=True))}
    return {
        "trials": len(records) + len(failures),
        "failures": len(failures),
        "median_epsilon": quantile(eps, 0.5),
        "mean_epsilon": float(eps.mean()),
        "max_epsilon": float(eps.max()),
        "frac_epsilon_gt_-5": float(np.mean(eps > -5)),
        "frac_epsilon_gt_-6": float(np.mean(eps > -6)),
        "median_gap": quantile(gap, 0.5),
        "mean_gap": float(gap.mean()),
        "frac_zero_real": float(np.mean(counts == 0)),
        "real_root_histogram": hist,
    }


def run_accuracy(config: TrialConfig, out: str | Path | None = None) -> dict:
    records, failures = _run(config, config.sigma)
    summary = accuracy_summary(records, failures)
    summary["records"] = records
    summary["failure_list"] = failures
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "trials.csv", TrialRecord.header(), [r.row() for r in records],
                  note=f"per-trial accuracy, variant {config.variant.value}, seed {config.seed}; "
                       "epsilon = 0.5*log10(sum of squared residuals); gap = log10 eps_40 - log10 eps_41")
        write_csv(out / "histogram.csv", ["n_real", "count"], sorted(summary["real_root_histogram"].items()),
                  note="real root counts over successful trials")
        keys = [k for k in summary if k not in ("records", "failure_list", "real_root_histogram")]
        write_csv(out / "summary.csv", ["statistic", "value"], [[k, summary[k]] for k in keys], note=STATS_NOTE)
        write_failures(out / "failures.csv", failures)
    return summary


def box_stats(values) -> dict:
    """Quartiles, 1.5 IQR whiskers and outliers of a sample."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        nan = float("nan")
        return {"n": 0, "q1": nan, "median": nan, "q3": nan, "whisker_lo": nan, "whisker_hi": nan,
                "outliers": []}
    q1, med, q3 = (quantile(x, q) for q in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    inside = x[(x >= q1 - 1.5 * iqr) & (x <= q3 + 1.5 * iqr)]
    outliers = x[(x < q1 - 1.5 * iqr) | (x > q3 + 1.5 * iqr)]
    # with a tiny sample every point can sit outside a zero-width box
    lo, hi = (float(inside.min()), float(inside.max())) if inside.size else (q1, q3)
    return {"n": int(x.size), "q1": q1, "median": med, "q3": q3, "whisker_lo": lo, "whisker_hi": hi,
            "outliers": outliers.tolist()}


def sigma_grid(sigma_max: float = SIGMA_MAX, steps: int = 9) -> np.ndarray:
    if steps < 1 or sigma_max < 0:
        raise InputValidationError("need steps >= 1 and sigma_max >= 0")
    return np.linspace(0.0, sigma_max, steps)


def run_noise(config: TrialConfig, sigmas=None, out: str | Path | None = None) -> list[dict]:
    """Pose errors against ground truth across a sigma grid, one row of statistics per sigma."""
    if config.mode is not LengthMode.FROM_POSE:
        raise InputValidationError("noise sweeps need ground-truth poses (mode 'pose')")
    sigmas = sigma_grid() if sigmas is None else np.asarray(sigmas, dtype=float)
    rows, all_records, all_failures = [], [], []
    for sigma in sigmas:
        records, failures = _run(config, float(sigma))
        found = [r for r in records if not np.isnan(r.eps_R)]
        rows.append({
            "sigma": float(sigma),
            "trials": config.trials,
            "failures": len(failures),
            "no_real_roots": len(records) - len(found),
            "eps_R": box_stats([r.eps_R for r in found]),
            "eps_t": box_stats([r.eps_t for r in found]),
        })
        all_records += records
        all_failures += failures
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "noise_trials.csv", TrialRecord.header(), [r.row() for r in all_records],
                  note=f"per-trial pose errors (radians), variant {config.variant.value}, seed {config.seed}; "
                       "eps_R/eps_t are nan when no real root was found")
        header = ["sigma", "trials", "failures", "no_real_roots"]
        body = []
        for name in ("eps_R", "eps_t"):
            header += [f"{name}_{s}" for s in ("n", "q1", "median", "q3", "whisker_lo", "whisker_hi",
                                               "n_outliers")]
        for r in rows:
            line = [r["sigma"], r["trials"], r["failures"], r["no_real_roots"]]
            for name in ("eps_R", "eps_t"):
                b = r[name]
                line += [b["n"], b["q1"], b["median"], b["q3"], b["whisker_lo"], b["whisker_hi"],
                         len(b["outliers"])]
            body.append(line)
        write_csv(out / "noise_summary.csv", header, body, note=STATS_NOTE + "; whiskers at 1.5 IQR")
        write_failures(out / "failures.csv", all_failures)
    for r in rows:
        r["records"] = [rec for rec in all_records if rec.sigma == r["sigma"]]
    return rows


def run_bench(repeats: int = 200, seed: int = 0, warmup: int = 5, variant=Variant.GENERAL_66) -> dict:
    """Mean and median wall time per stage over ``repeats`` solves, in seconds."""
    if repeats < 1:
        raise InputValidationError("repeats must be at least 1")
    config = TrialConfig(variant=variant, trials=repeats, seed=seed, mode=LengthMode.FROM_POSE)
    structure = warm_caches()
    for k in range(warmup):
        run_trial(config, repeats + k, structure=structure)
    samples = {s: [] for s in STAGES}
    wall = []
    failures = 0
    for k in range(repeats):
        t0 = time.perf_counter()
        try:
            rec = run_trial(config, k, structure=structure)
        except DegenerateInstanceError:
            failures += 1
            continue
        wall.append(time.perf_counter() - t0)
        for s in STAGES:
            samples[s].append(rec.timings[s])
    table = {s: {"mean": float(np.mean(v)), "median": quantile(v, 0.5)} for s, v in samples.items()}
    total = table["total"]["mean"]
    for s in STAGES:
        table[s]["fraction"] = table[s]["mean"] / total
    table["wall"] = {"mean": float(np.mean(wall)), "median": quantile(wall, 0.5), "fraction": float("nan")}
    return {"repeats": repeats, "failures": failures, "stages": table,
            "largest_stage": max(("template", "plu", "qz", "filter"), key=lambda s: table[s]["mean"])}


def fmt_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header: list, rows, note: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if note:
            fh.write(f"# {note}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_value(v) for v in row])


def write_failures(path: Path, failures: list[Failure]) -> None:
    write_csv(path, ["trial", "sigma", "stage", "message"],
              [[f.trial, f.sigma, f.stage or "", f.message] for f in failures],
              note="trials excluded from statistics")


def read_csv(path: str | Path) -> tuple[list, list]:
    """Header and rows of a CSV written by :func:`write_csv` (comment line skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
