"""Action pencil, generalized eigenvectors and root filtering."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .errors import DegenerateInstanceError, SGPError, SolverFailureError, StructureError
from .kinematics import (
    LegMeasurements,
    PlatformGeometry,
    Pose,
    PolynomialSystem,
    build_polynomial_system,
    cayley_rotation,
    residuals,
)
from .structure import TemplateStructure, default_structure
from .template import EliminatedBlocks, assemble_macaulay, plu_eliminate, schur_reduce

N_ROOTS = 40
REAL_TOL = 1e-6
CONJ_TOL = 1e-6
EXTRACT_TOL = 1e-12
# generic random platforms stay below about 1e11; coordinate-plane platforms sit near 1e17
COND_RETRY = 1e13
# fixed generic change of world coordinates used by the singular-pencil fallback
FRAME_ROTATION = cayley_rotation(np.array([0.37, -0.21, 0.52]))

# positions of uw, vw, w^2, xw, yw, zw, w in the basic monomial vector
P_SLICE = slice(62, 65)
T_SLICE = slice(65, 68)
W_INDEX = 68


@dataclass(frozen=True, eq=False)
class ActionPencil:
    T0: np.ndarray
    T1: np.ndarray


def _action_rows(structure: TemplateStructure):
    kinds = np.array([k == "reducible" for k, _ in structure.action_map])
    pos = np.array([j for _, j in structure.action_map])
    return np.flatnonzero(~kinds), pos[~kinds], np.flatnonzero(kinds), pos[kinds]


def build_action_pencil(blocks: EliminatedBlocks, structure: TemplateStructure) -> ActionPencil:
    """Matrices of ``(1/w) T1 b = T0 b`` over the basic monomial vector ``b``."""
    nB = len(structure.basic)
    if len(structure.action_map) != nB:
        raise StructureError("action map does not cover the basic monomials")
    basic_rows, basic_pos, red_rows, red_pos = _action_rows(structure)
    T0 = np.zeros((nB, nB))
    T1 = np.zeros((nB, nB))
    # b_i = w * b_j when b_i / w is itself basic
    T0[basic_rows, basic_pos] = 1.0
    T1[basic_rows, basic_rows] = 1.0
    # otherwise b_i / w is reducible: A_R r + A_B b = 0 expresses it in b
    T0[red_rows] = -blocks.A_B[red_pos]
    T1[np.ix_(red_rows, red_rows)] = blocks.A_R[np.ix_(red_pos, red_pos)]
    return ActionPencil(T0, T1)


@dataclass(frozen=True, eq=False)
class EigenPairs:
    alpha: np.ndarray
    beta: np.ndarray
    vectors: np.ndarray  # columns, unit 2-norm


def solve_pencil(pencil: ActionPencil) -> EigenPairs:
    """QZ on the pair; ``alpha T1 v = beta T0 v`` with infinite eigenvalues kept."""
    T0, T1 = pencil.T0, pencil.T1
    if not (np.all(np.isfinite(T0)) and np.all(np.isfinite(T1))):
        raise SolverFailureError("non-finite entries in the action pencil", stage="qz")
    alphar, alphai, beta, _, vr, _, info = lapack.dggev(T0, T1, compute_vl=0, compute_vr=1)
    if info != 0:
        raise SolverFailureError(f"QZ failed (dggev info={info})", stage="qz")
    alpha = alphar + 1j * alphai
    # a complex pair (j, j+1) is stored as real part / imaginary part columns
    V = vr.astype(complex)
    first = np.flatnonzero(alphai > 0)
    first = first[first + 1 < len(alphai)]
    V[:, first] = vr[:, first] + 1j * vr[:, first + 1]
    V[:, first + 1] = np.conj(V[:, first])
    V /= np.linalg.norm(V, axis=0, keepdims=True)
    return EigenPairs(alpha, beta.astype(complex), V)


@dataclass(frozen=True, eq=False)
class Candidates:
    points: np.ndarray  # (69, 6) complex (u, v, w, x, y, z)
    valid: np.ndarray  # bool


def extract_candidates(pairs: EigenPairs, structure: TemplateStructure | None = None) -> Candidates:
    V = pairs.vectors
    scale = np.linalg.norm(V, axis=0)
    denom = V[W_INDEX]
    valid = np.abs(denom) >= EXTRACT_TOL * scale
    safe = np.where(valid, denom, 1.0)
    pts = np.vstack([V[P_SLICE], V[T_SLICE]]) / safe
    pts[:, ~valid] = np.nan
    return Candidates(pts.T.astype(complex), valid)


def _is_real(points: np.ndarray) -> np.ndarray:
    """Row-wise realness test for a (k, 6) complex array."""
    points = np.atleast_2d(points)
    return np.abs(points.imag).max(axis=1) <= REAL_TOL * (1.0 + np.abs(points.real).max(axis=1))


def _pair_conjugates(points: np.ndarray, real: np.ndarray) -> np.ndarray:
    """Greedy nearest-conjugate matching; -1 for real or unmatched roots."""
    n = len(points)
    partner = np.full(n, -1)
    scale = 1.0 + np.abs(points).max(axis=1)
    D = np.abs(points[None, :, :] - np.conj(points[:, None, :])).max(axis=2) / scale[:, None]
    D[:, real] = np.inf
    np.fill_diagonal(D, np.inf)
    for i in np.flatnonzero(~real):
        if partner[i] >= 0:
            continue
        j = int(np.argmin(D[i]))
        if D[i, j] <= CONJ_TOL:
            partner[i], partner[j] = j, i
            D[:, [i, j]] = np.inf
    return partner


@dataclass(eq=False)
class SolutionSet:
    candidate_points: np.ndarray  # (69, 6) complex, nan where invalid
    candidate_valid: np.ndarray
    candidate_residuals: np.ndarray  # inf where invalid
    order: np.ndarray  # candidate indices sorted by residual
    points: np.ndarray  # (40, 6) accepted roots, ascending residual
    residuals: np.ndarray  # (40,)
    real: np.ndarray  # (40,) bool
    conjugate: np.ndarray  # (40,) index of partner or -1
    gap: float  # log10 eps_40 - log10 eps_41, negative when the 40th root is well separated
    timings: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def poses(self) -> list[Pose]:
        return [Pose(pt[:3].real, pt[3:].real) if r else Pose(pt[:3], pt[3:])
                for pt, r in zip(self.points, self.real)]

    @property
    def real_poses(self) -> list[Pose]:
        return [Pose(pt[:3].real, pt[3:].real) for pt, r in zip(self.points, self.real) if r]

    @property
    def n_real(self) -> int:
        return int(self.real.sum())

    def records(self) -> list[dict]:
        out = []
        for pt, res, r in zip(self.points, self.residuals, self.real):
            out.append({"p": pt[:3], "t": pt[3:], "residual": float(res), "real": bool(r)})
        return out


def filter_roots(system: PolynomialSystem, candidates: Candidates, n_roots: int = N_ROOTS) -> SolutionSet:
    valid = candidates.valid
    if valid.sum() < n_roots:
        raise DegenerateInstanceError(
            f"only {int(valid.sum())} valid candidates, need {n_roots}", stage="filter")
    eps = np.full(len(valid), np.inf)
    eps[valid] = residuals(system, candidates.points[valid])
    idx = np.arange(len(eps))
    order = np.lexsort((idx, eps))
    accepted = order[:n_roots]
    pts = candidates.points[accepted].copy()
    real = _is_real(pts)
    pts[real] = pts[real].real
    with np.errstate(divide="ignore"):
        e40 = eps[order[n_roots - 1]]
        e41 = eps[order[n_roots]] if len(order) > n_roots else np.inf
        gap = float(np.log10(e40) - np.log10(e41))
    return SolutionSet(
        candidate_points=candidates.points,
        candidate_valid=valid,
        candidate_residuals=eps,
        order=order,
        points=pts,
        residuals=eps[accepted],
        real=real,
        conjugate=_pair_conjugates(pts, real),
        gap=gap,
    )


def _solve_in_frame(geom: PlatformGeometry, L: LegMeasurements, structure: TemplateStructure,
                    schur_method: str):
    clock = time.perf_counter
    stage = "template"
    try:
        t0 = clock()
        system = build_polynomial_system(geom, L)
        M = assemble_macaulay(system, structure)
        T = schur_reduce(M, structure, float(L.squared_lengths[0]), method=schur_method)
        t1 = clock()
        stage = "plu"
        blocks = plu_eliminate(T)
        t2 = clock()
        stage = "qz"
        pairs = solve_pencil(build_action_pencil(blocks, structure))
        t3 = clock()
        stage = "extract"
        candidates = extract_candidates(pairs, structure)
        t4 = clock()
    except SGPError as exc:
        if getattr(exc, "stage", None) is None and isinstance(exc, DegenerateInstanceError):
            exc.stage = stage
        raise
    timings = {"template": t1 - t0, "plu": t2 - t1, "qz": t3 - t2, "filter": t4 - t3}
    diagnostics = {"cond_A_R": blocks.condition, "elimination_residual": blocks.residual_excessive,
                   "sparsity": T.sparsity}
    return system, candidates, timings, diagnostics


def rotate_frames(geom: PlatformGeometry, rotation: np.ndarray) -> PlatformGeometry:
    """The same platform described in world coordinates rotated by ``rotation``."""
    return PlatformGeometry(geom.top_points @ rotation.T, geom.base_points @ rotation.T, geom.variant)


def map_candidates_back(candidates: Candidates, rotation: np.ndarray) -> Candidates:
    """Undo :func:`rotate_frames` on roots.

    With both frames turned by Q the pose becomes (Q R Q^T, Q t), whose Cayley
    vector is Q p, so the map back is linear and keeps complex roots exact.
    """
    pts = candidates.points.copy()
    pts[:, :3] = pts[:, :3] @ rotation
    pts[:, 3:] = pts[:, 3:] @ rotation
    return Candidates(pts, candidates.valid.copy())


def forward_kinematics(geom: PlatformGeometry, L: LegMeasurements,
                       structure: TemplateStructure | None = None,
                       schur_method: str = "offline", frame_retry: bool = True) -> SolutionSet:
    """All 40 complex postures for the given geometry and squared leg lengths.

    The template is tied to the coordinate axes through the action monomial,
    and a platform lying in a coordinate plane makes the action pencil
    singular. When ``A_R`` is that badly conditioned the same instance is
    solved again in a fixed generically rotated world frame and the roots are
    mapped back; the better conditioned attempt is kept.
    """
    structure = default_structure() if structure is None else structure
    start = time.perf_counter()
    system, cands, timings, diag = _solve_in_frame(geom, L, structure, schur_method)
    diag["frame"] = "original"
    if frame_retry and not diag["cond_A_R"] <= COND_RETRY:
        try:
            _, cands2, timings2, diag2 = _solve_in_frame(
                rotate_frames(geom, FRAME_ROTATION), L, structure, schur_method)
        except DegenerateInstanceError:
            diag2 = None
        if diag2 is not None and diag2["cond_A_R"] < diag["cond_A_R"]:
            cands = map_candidates_back(cands2, FRAME_ROTATION)
            diag2["frame"] = "rotated"
            diag2["cond_A_R_original"] = diag["cond_A_R"]
            diag = diag2
        for k in timings:
            timings[k] += timings2[k] if diag2 is not None else 0.0
    t0 = time.perf_counter()
    try:
        sol = filter_roots(system, cands)
    except DegenerateInstanceError as exc:
        exc.stage = exc.stage or "filter"
        raise
    timings["filter"] += time.perf_counter() - t0
    timings["total"] = time.perf_counter() - start
    sol.timings = timings
    sol.diagnostics = diag
    return sol
