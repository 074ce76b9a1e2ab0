"""JSON input files and solution serialization."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputValidationError
from .kinematics import LegMeasurements, PlatformGeometry, Variant
from .pencil import SolutionSet


def _read_json(path) -> object:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputValidationError(f"{path} is not valid JSON: {exc}") from exc


def _matrix(obj, name: str) -> np.ndarray:
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputValidationError(f"{name} must be numeric") from exc
    return a


def geometry_from_dict(data: dict) -> tuple[PlatformGeometry, LegMeasurements | None]:
    """Parse ``{"top": 6x3, "base": 6x3, "variant": "66", "L": [6 squared lengths]}``.

    ``variant`` and ``L`` are optional.
    """
    if not isinstance(data, dict):
        raise InputValidationError("geometry file must hold a JSON object")
    missing = {"top", "base"} - set(data)
    if missing:
        raise InputValidationError(f"geometry file lacks {sorted(missing)}")
    geom = PlatformGeometry(_matrix(data["top"], "top"), _matrix(data["base"], "base"),
                            Variant.parse(data.get("variant", "66")))
    L = lengths_from_obj(data["L"]) if "L" in data else None
    return geom, L


def lengths_from_obj(obj) -> LegMeasurements:
    """Six squared lengths, given as a list or as ``{"L": [...]}``."""
    if isinstance(obj, dict):
        if "L" not in obj:
            raise InputValidationError("lengths object needs an 'L' entry")
        obj = obj["L"]
    return LegMeasurements(_matrix(obj, "L"))


def load_geometry(path) -> tuple[PlatformGeometry, LegMeasurements | None]:
    return geometry_from_dict(_read_json(path))


def load_lengths(path) -> LegMeasurements:
    return lengths_from_obj(_read_json(path))


def geometry_to_dict(geom: PlatformGeometry, L: LegMeasurements | None = None) -> dict:
    out = {"variant": geom.variant.value, "top": geom.top_points.tolist(), "base": geom.base_points.tolist()}
    if L is not None:
        out["L"] = L.squared_lengths.tolist()
    return out


def _num(z):
    """Real number, or [re, im] pair for a complex one."""
    z = complex(z)
    if z.imag == 0:
        return z.real
    return [z.real, z.imag]


def solution_records(sol: SolutionSet, all_complex: bool = False) -> list[dict]:
    out = []
    for k, (pt, res, real, partner) in enumerate(zip(sol.points, sol.residuals, sol.real, sol.conjugate)):
        if not (real or all_complex):
            continue
        vals = pt.real if real else pt
        out.append({
            "index": k,
            "real": bool(real),
            "p": [_num(v) for v in vals[:3]],
            "t": [_num(v) for v in vals[3:]],
            "residual": float(res),
            "conjugate_of": int(partner),
        })
    return out


def solution_to_dict(sol: SolutionSet, all_complex: bool = False) -> dict:
    return {
        "n_roots": len(sol.points),
        "n_real": sol.n_real,
        "gap": sol.gap,
        "roots": solution_records(sol, all_complex),
        "timings_s": sol.timings,
        "diagnostics": {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                        for k, v in sol.diagnostics.items()},
    }


def dumps_json(obj) -> str:
    # repr of a Python float is the shortest string that round-trips
    return json.dumps(obj, indent=2, allow_nan=True)


SOLUTION_CSV_HEADER = ["index", "real", "residual", "u_re", "u_im", "v_re", "v_im", "w_re", "w_im",
                       "x_re", "x_im", "y_re", "y_im", "z_re", "z_im"]


def solution_csv_rows(sol: SolutionSet, all_complex: bool = False) -> list[list]:
    rows = []
    for k, (pt, res, real) in enumerate(zip(sol.points, sol.residuals, sol.real)):
        if not (real or all_complex):
            continue
        row = [k, int(real), float(res)]
        for v in pt:
            row += [float(np.real(v)), 0.0 if real else float(np.imag(v))]
        rows.append(row)
    return rows


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj) + "\n")
