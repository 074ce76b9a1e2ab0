"""Independent reference computations used by the tests.

Nothing here goes through the package's polynomial arithmetic or template code.
"""
import numpy as np

from sgpfk.experiments import gen_geometry, gen_lengths, trial_rng


def cayley_by_solve(p):
    """(I - S)(I + S)^-1 with S = [p]x, computed by a linear solve."""
    p = np.asarray(p)
    S = np.array([[0, -p[2], p[1]], [p[2], 0, -p[0]], [-p[1], p[0], 0]], dtype=p.dtype)
    eye = np.eye(3)
    # X (I + S) = (I - S)  <=>  (I + S)^T X^T = (I - S)^T
    return np.linalg.solve((eye + S).T, (eye - S).T).T


def leg_lengths_loop(top, base, R, t):
    out = []
    for x, X in zip(top, base):
        d = [sum(R[r][c] * x[c] for c in range(3)) + t[r] - X[r] for r in range(3)]
        out.append(sum(v * v for v in d))
    return np.array(out)


def leg_values(top, base, L, p, t):
    """(1 + p.p)(|R(p) x_i + t - X_i|^2 - L_i) by direct numeric evaluation, complex allowed."""
    R = cayley_by_solve(p)
    s = 1 + np.asarray(p) @ np.asarray(p)
    out = []
    for i, (x, X) in enumerate(zip(top, base)):
        d = R @ x + t - X
        out.append(s * (d @ d - L[i]))
    return np.array(out)


def monomial_values(monomials, point):
    """Product of point[k] ** e[k] by plain Python loops."""
    out = []
    for m in monomials:
        v = 1
        for base, e in zip(point, m):
            v = v * base ** e
        out.append(v)
    return np.array(out)


def instance(variant="66", seed=0, trial=0, mode="pose"):
    rng = trial_rng(seed, trial)
    geom = gen_geometry(variant, rng)
    L, gt = gen_lengths(geom, mode, rng)
    return geom, L, gt


def axis_angle_rotation(axis, angle):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
