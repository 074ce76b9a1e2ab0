import numpy as np
import pytest

from sgpfk.errors import DegenerateInstanceError, SolverFailureError
from sgpfk.kinematics import PlatformGeometry, Pose, build_polynomial_system, leg_lengths_from_pose
from sgpfk.pencil import (
    FRAME_ROTATION,
    ActionPencil,
    Candidates,
    EigenPairs,
    build_action_pencil,
    extract_candidates,
    filter_roots,
    forward_kinematics,
    map_candidates_back,
    rotate_frames,
    solve_pencil,
)
from sgpfk.polynomial import evaluate_monomials, monomial_matrix
from sgpfk.template import assemble_macaulay, plu_eliminate, schur_reduce

from oracles import instance


def _pencil(structure, seed, variant="66"):
    geom, L, gt = instance(variant, seed=seed)
    M = assemble_macaulay(build_polynomial_system(geom, L), structure)
    blocks = plu_eliminate(schur_reduce(M, structure, float(L.squared_lengths[0])))
    return build_action_pencil(blocks, structure), gt


def _pose_error(a: Pose, b: Pose):
    return max(np.abs(a.rotation - b.rotation).max(), np.abs(a.t - b.t).max() / (1 + np.abs(b.t).max()))


def test_true_root_is_an_eigenvector(structure):
    pencil, gt = _pencil(structure, 3)
    b = evaluate_monomials(monomial_matrix(structure.basic), gt.point)
    w = gt.point[2]
    lhs = pencil.T1 @ b / w
    rhs = pencil.T0 @ b
    assert np.abs(lhs - rhs).max() <= 1e-9 * np.abs(rhs).max()


def test_eigen_residuals_small(structure):
    pencil, _ = _pencil(structure, 4)
    pairs = solve_pencil(pencil)
    scale = np.linalg.norm(pencil.T0, 2) + np.linalg.norm(pencil.T1, 2)
    for k in range(len(pairs.alpha)):
        v = pairs.vectors[:, k]
        r = pairs.alpha[k] * (pencil.T1 @ v) - pairs.beta[k] * (pencil.T0 @ v)
        assert np.linalg.norm(r) <= 1e-10 * scale * max(1, abs(pairs.alpha[k]), abs(pairs.beta[k]))
    assert np.allclose(np.linalg.norm(pairs.vectors, axis=0), 1)


def test_non_finite_pencil_rejected():
    T = np.eye(3)
    bad = T.copy()
    bad[0, 0] = np.nan
    with pytest.raises(SolverFailureError) as info:
        solve_pencil(ActionPencil(bad, T))
    assert info.value.stage == "qz"


def test_extraction_reads_monomial_positions(structure):
    pt = np.array([0.3, -0.4, 1.7, 0.2, 0.9, -1.1])
    b = evaluate_monomials(monomial_matrix(structure.basic), pt)
    V = np.column_stack([b, b * 2.5j, np.r_[b[:-1], 0.0]])
    V /= np.linalg.norm(V, axis=0)
    pairs = EigenPairs(np.ones(3, complex), np.ones(3, complex), V)
    c = extract_candidates(pairs, structure)
    assert c.valid.tolist() == [True, True, False]
    assert np.allclose(c.points[0], pt)
    assert np.allclose(c.points[1], pt)
    assert np.all(np.isnan(c.points[2]))


def test_too_few_valid_candidates(structure):
    geom, L, _ = instance("66", seed=0)
    system = build_polynomial_system(geom, L)
    pts = np.zeros((69, 6), complex)
    valid = np.zeros(69, bool)
    valid[:39] = True
    with pytest.raises(DegenerateInstanceError) as info:
        filter_roots(system, Candidates(pts, valid))
    assert info.value.stage == "filter"


@pytest.mark.parametrize("variant", ["66", "65", "6p6"])
def test_ground_truth_recovered(structure, variant):
    for seed in range(3):
        geom, L, gt = instance(variant, seed=seed)
        sol = forward_kinematics(geom, L, structure)
        assert len(sol.points) == 40
        assert sol.gap <= -4
        assert min(_pose_error(p, gt) for p in sol.real_poses) < 1e-6


def test_conjugate_closure_and_even_real_count(structure):
    for seed in range(10):
        geom, L, _ = instance("66", seed=seed, mode="uniform")
        sol = forward_kinematics(geom, L, structure)
        assert sol.n_real % 2 == 0
        complex_idx = np.flatnonzero(~sol.real)
        assert np.all(sol.conjugate[complex_idx] >= 0)
        assert np.all(sol.conjugate[sol.conjugate[complex_idx]] == complex_idx)


def test_swap_symmetry_on_real_roots(structure):
    checked = 0
    for seed in range(8):
        geom, L, _ = instance("66", seed=seed)
        a = forward_kinematics(geom, L, structure)
        b = forward_kinematics(geom.swapped(), L, structure)
        assert a.n_real == b.n_real
        for pose in a.real_poses:
            inv = pose.inverse()
            assert min(_pose_error(q, inv) for q in b.real_poses) < 1e-6
            checked += 1
    assert checked > 0


def test_scaling_keeps_rotation_and_scales_translation(structure):
    geom, L, gt = instance("66", seed=6)
    s = 2.5
    scaled = PlatformGeometry(geom.top_points * s, geom.base_points * s)
    sol = forward_kinematics(scaled, leg_lengths_from_pose(scaled, Pose(gt.p, gt.t * s)), structure)
    best = min(sol.real_poses, key=lambda q: np.abs(q.p - gt.p).max())
    assert np.abs(best.p - gt.p).max() < 1e-7
    assert np.abs(best.t - s * gt.t).max() < 1e-6 * s


def test_frame_rotation_round_trip():
    geom, _, gt = instance("66", seed=1)
    turned = rotate_frames(geom, FRAME_ROTATION)
    Q = FRAME_ROTATION
    pt = np.r_[Q @ gt.p, Q @ gt.t][None, :].astype(complex)
    back = map_candidates_back(Candidates(pt, np.array([True])), Q)
    assert np.allclose(back.points[0], gt.point)
    # same leg lengths in the turned frame for the turned pose
    L1 = leg_lengths_from_pose(geom, gt).squared_lengths
    L2 = leg_lengths_from_pose(turned, Pose(Q @ gt.p, Q @ gt.t)).squared_lengths
    assert np.allclose(L1, L2)


def test_coordinate_plane_platform_uses_rotated_frame(structure):
    geom, _, gt = instance("66", seed=0)
    flat_base = geom.base_points.copy()
    flat_base[:, 2] = 0.0
    flat = PlatformGeometry(geom.top_points, flat_base, "6p6")
    L = leg_lengths_from_pose(flat, gt)
    sol = forward_kinematics(flat, L, structure)
    assert sol.diagnostics["frame"] == "rotated"
    assert sol.diagnostics["cond_A_R"] < sol.diagnostics["cond_A_R_original"]
    assert min(_pose_error(p, gt) for p in sol.real_poses) < 1e-6


def test_generic_instance_stays_in_original_frame(structure):
    geom, L, _ = instance("66", seed=2)
    assert forward_kinematics(geom, L, structure).diagnostics["frame"] == "original"


def test_timings_reported(structure):
    geom, L, _ = instance("66", seed=2)
    t = forward_kinematics(geom, L, structure).timings
    assert set(t) == {"template", "plu", "qz", "filter", "total"}
    assert t["total"] >= t["template"] + t["plu"] + t["qz"]
