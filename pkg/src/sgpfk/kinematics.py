"""Platform geometry, Cayley rotations and the polynomial leg equations."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InputValidationError, SingularParametrizationError
from .polynomial import (
    ONE,
    Polynomial,
    evaluate_monomials,
    grevlex_key,
    monomial_matrix,
    variable,
)

COORD_TOL = 1e-12


class Variant(enum.Enum):
    GENERAL_66 = "66"
    COINCIDENT_65 = "65"
    SEMIPLANAR_6P6 = "6p6"

    @classmethod
    def parse(cls, tag) -> "Variant":
        if isinstance(tag, cls):
            return tag
        key = str(tag).lower().replace("-", "").replace("_", "")
        aliases = {"66": cls.GENERAL_66, "general66": cls.GENERAL_66,
                   "65": cls.COINCIDENT_65, "coincident65": cls.COINCIDENT_65,
                   "6p6": cls.SEMIPLANAR_6P6, "semiplanar6p6": cls.SEMIPLANAR_6P6}
        try:
            return aliases[key]
        except KeyError:
            raise InputValidationError(f"unknown variant tag {tag!r}") from None


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _is_planar_through_origin(points: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(points).max()))
    sv = np.linalg.svd(points, compute_uv=False)
    return sv[-1] <= 1e-9 * scale


def _coincident_pairs(points: np.ndarray) -> list[tuple[int, int]]:
    scale = max(1.0, float(np.abs(points).max()))
    pairs = []
    for i in range(6):
        for j in range(i + 1, 6):
            if np.abs(points[i] - points[j]).max() <= 1e-12 * scale:
                pairs.append((i, j))
    return pairs


@dataclass(frozen=True, eq=False)
class PlatformGeometry:
    """Attachment points of the six legs.

    ``top_points[i]`` is x_i in the mobile platform frame and ``base_points[i]``
    is X_i in the base frame. The first leg is anchored at both origins.
    """

    top_points: np.ndarray
    base_points: np.ndarray
    variant: Variant = Variant.GENERAL_66

    def __post_init__(self):
        top = _frozen(self.top_points)
        base = _frozen(self.base_points)
        object.__setattr__(self, "top_points", top)
        object.__setattr__(self, "base_points", base)
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        for name, pts in (("top", top), ("base", base)):
            if pts.shape != (6, 3):
                raise InputValidationError(f"{name} points must be a 6x3 array, got {pts.shape}")
            if not np.all(np.isfinite(pts)):
                raise InputValidationError(f"{name} points must be finite")
        if np.abs(top[0]).max() > COORD_TOL or np.abs(base[0]).max() > COORD_TOL:
            raise InputValidationError("frame convention violated: x_1 and X_1 must be the origin")
        if self.variant is Variant.COINCIDENT_65 and len(_coincident_pairs(top)) != 1:
            raise InputValidationError("6-5 variant requires exactly one coincident pair of top points")
        if self.variant is Variant.SEMIPLANAR_6P6 and not _is_planar_through_origin(base):
            raise InputValidationError("6P-6 variant requires coplanar base points")
        if _is_planar_through_origin(top) and _is_planar_through_origin(base):
            raise InputValidationError("both platforms planar (6P-6P) is a degenerate configuration")

    def swapped(self) -> "PlatformGeometry":
        """Exchange the roles of base and platform (variant tag becomes GENERAL_66 if it no longer applies)."""
        variant = Variant.GENERAL_66
        if _is_planar_through_origin(self.top_points):
            variant = Variant.SEMIPLANAR_6P6
        elif len(_coincident_pairs(self.base_points)) == 1:
            variant = Variant.COINCIDENT_65
        return PlatformGeometry(self.base_points, self.top_points, variant)


@dataclass(frozen=True, eq=False)
class LegMeasurements:
    squared_lengths: np.ndarray

    def __post_init__(self):
        L = _frozen(self.squared_lengths)
        object.__setattr__(self, "squared_lengths", L)
        if L.shape != (6,):
            raise InputValidationError(f"expected six squared leg lengths, got shape {L.shape}")
        if not np.all(np.isfinite(L)) or np.any(L < 0):
            raise InputValidationError("squared leg lengths must be finite and nonnegative")

    @property
    def lengths(self) -> np.ndarray:
        return np.sqrt(self.squared_lengths)


@dataclass(frozen=True, eq=False)
class Pose:
    """Cayley vector ``p = (u, v, w)`` and translation ``t = (x, y, z)``."""

    p: np.ndarray
    t: np.ndarray
    scalar_field: str = field(default="real", init=False)

    def __post_init__(self):
        p = np.asarray(self.p)
        t = np.asarray(self.t)
        kind = complex if np.iscomplexobj(p) or np.iscomplexobj(t) else float
        object.__setattr__(self, "p", _frozen(p, kind))
        object.__setattr__(self, "t", _frozen(t, kind))
        object.__setattr__(self, "scalar_field", "complex" if kind is complex else "real")
        if self.p.shape != (3,) or self.t.shape != (3,):
            raise InputValidationError("pose vectors must have length 3")

    @classmethod
    def from_rotation(cls, R, t) -> "Pose":
        return cls(inverse_cayley(R), t)

    @property
    def rotation(self) -> np.ndarray:
        return cayley_rotation(self.p)

    @property
    def point(self) -> np.ndarray:
        """The 6-vector (u, v, w, x, y, z)."""
        return np.concatenate([self.p, self.t])

    def is_real(self) -> bool:
        return self.scalar_field == "real"

    def real(self) -> "Pose":
        return Pose(np.real(self.p), np.real(self.t))

    def inverse(self) -> "Pose":
        """The pose (R^T, -R^T t) of the base relative to the platform."""
        R = self.rotation
        return Pose(-self.p, -R.T @ self.t)


def skew(p) -> np.ndarray:
    p = np.asarray(p)
    return np.array([[0, -p[2], p[1]], [p[2], 0, -p[0]], [-p[1], p[0], 0]], dtype=p.dtype)


def cayley_rotation(p) -> np.ndarray:
    """Rotation ``(I - [p]x)(I + [p]x)^-1`` in closed form; complex vectors allowed."""
    p = np.asarray(p)
    if not np.iscomplexobj(p):
        p = p.astype(float)
    n2 = p @ p  # bilinear, not Hermitian, so that complex roots map consistently
    denom = 1 + n2
    if abs(denom) < 1e-14:
        raise SingularParametrizationError("1 + p.p vanishes; Cayley transform undefined")
    return ((1 - n2) * np.eye(3) + 2 * np.outer(p, p) - 2 * skew(p)) / denom


def inverse_cayley(R, tol: float = 1e-10) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    denom = 1.0 + np.trace(R)
    if denom < tol:
        raise SingularParametrizationError("rotation by pi cannot be represented by a Cayley vector")
    A = R.T - R
    return np.array([A[2, 1], A[0, 2], A[1, 0]]) / denom


def leg_lengths_from_pose(geom: PlatformGeometry, pose: Pose) -> LegMeasurements:
    if not pose.is_real():
        raise InputValidationError("leg lengths are defined for real poses only")
    R = pose.rotation
    d = geom.top_points @ R.T + pose.t - geom.base_points
    return LegMeasurements(np.einsum("ij,ij->i", d, d))


@lru_cache(maxsize=None)
def _pose_products() -> dict:
    """Geometry-independent pieces of the leg polynomial, built once."""
    P = [Polynomial.var(n) for n in ("u", "v", "w")]
    T = [Polynomial.var(n) for n in ("x", "y", "z")]
    pp = P[0] * P[0] + P[1] * P[1] + P[2] * P[2]
    s = pp + 1
    return {
        "P": P,
        "T": T,
        "s": s,
        "one_minus_pp": 1 - pp,
        "PP": [[P[k] * P[j] for j in range(3)] for k in range(3)],
        "sT": [s * T[k] for k in range(3)],
        "sTT": s * (T[0] * T[0] + T[1] * T[1] + T[2] * T[2]),
    }


def leg_polynomial(top_point, base_point, squared_length) -> Polynomial:
    """(1 + |p|^2) (|R(p) x + t - X|^2 - L) expanded over (u, v, w, x, y, z).

    Uses (1 + |p|^2) R(p) = (1 - |p|^2) I + 2 p p^T - 2 [p]x, so
    (1 + |p|^2) |R x + t - X|^2 = s |x|^2 + 2 (N x).(t - X) + s |t - X|^2
    with s = 1 + |p|^2 and N the numerator matrix above.
    Coefficient arithmetic is generic: ints give exact integer polynomials.
    """
    c = _pose_products()
    P, T, PP = c["P"], c["T"], c["PP"]
    a = list(top_point)
    b = list(base_point)
    d = [T[k] - b[k] for k in range(3)]
    # (N a)_k = (1 - |p|^2) a_k + 2 p_k (p.a) - 2 (p x a)_k
    cross = [P[1].scale(a[2]) - P[2].scale(a[1]),
             P[2].scale(a[0]) - P[0].scale(a[2]),
             P[0].scale(a[1]) - P[1].scale(a[0])]
    Na = []
    for k in range(3):
        acc = c["one_minus_pp"].scale(a[k]) - cross[k].scale(2)
        for j in range(3):
            acc = acc + PP[k][j].scale(2 * a[j])
        Na.append(acc)
    aa = a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
    bb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2]
    lin = Na[0] * d[0] + Na[1] * d[1] + Na[2] * d[2]
    # s |t - X|^2 = s |t|^2 - 2 sum_k b_k s t_k + s |X|^2
    sdd = c["sTT"] + c["s"].scale(bb)
    for k in range(3):
        sdd = sdd - c["sT"][k].scale(2 * b[k])
    return c["s"].scale(aa) + lin.scale(2) + sdd - c["s"].scale(squared_length)


def first_polynomial(squared_length) -> Polynomial:
    """f_1 = x^2 + y^2 + z^2 - L_1 (the leg through both origins)."""
    x, y, z = (variable(n) for n in ("x", "y", "z"))
    sq = lambda m: tuple(2 * k for k in m)  # noqa: E731
    return Polynomial({sq(x): 1, sq(y): 1, sq(z): 1, ONE: -squared_length})


@lru_cache(maxsize=None)
def generic_support() -> tuple:
    """Support of a leg polynomial with all geometry entries generic, in grevlex order."""
    rng = np.random.default_rng(20240101)
    f = leg_polynomial(rng.uniform(1, 2, 3), rng.uniform(1, 2, 3), 1.2345)
    return tuple(sorted(f.support, key=grevlex_key))


@dataclass(frozen=True, eq=False)
class PolynomialSystem:
    """The six leg polynomials as a 6 x n coefficient matrix over ``monomials``."""

    coefficients: np.ndarray
    squared_lengths: np.ndarray
    monomials: tuple = field(default_factory=generic_support)

    def __post_init__(self):
        C = np.array(self.coefficients, dtype=float)
        if C.shape != (6, len(self.monomials)):
            raise InputValidationError(f"coefficient matrix has shape {C.shape}, "
                                       f"expected (6, {len(self.monomials)})")
        if not np.all(np.isfinite(C)):
            raise InputValidationError("non-finite polynomial coefficient")
        C.setflags(write=False)
        object.__setattr__(self, "coefficients", C)
        object.__setattr__(self, "_exponents", monomial_matrix(self.monomials))

    @classmethod
    def from_polynomials(cls, polynomials, squared_lengths, monomials=None) -> "PolynomialSystem":
        monomials = generic_support() if monomials is None else tuple(monomials)
        if len(polynomials) != 6:
            raise InputValidationError("a system has exactly six polynomials")
        extra = {m for f in polynomials for m in f} - set(monomials)
        if extra:
            raise InputValidationError(f"polynomial terms outside the monomial universe: {sorted(extra)}")
        C = np.array([f.coefficient_vector(monomials) for f in polynomials], dtype=float)
        return cls(C, np.asarray(squared_lengths, dtype=float), monomials)

    @property
    def polynomials(self) -> tuple:
        return tuple(Polynomial({m: c for m, c in zip(self.monomials, row) if c != 0})
                     for row in self.coefficients)

    @property
    def exponents(self) -> np.ndarray:
        return self._exponents

    def normalized_macaulay(self) -> np.ndarray:
        C = self.coefficients
        return C / np.linalg.norm(C, axis=1, keepdims=True)

    def evaluate(self, point) -> np.ndarray:
        """Values of f_1..f_6 at a 6-vector (or a (k, 6) batch)."""
        z = evaluate_monomials(self.exponents, point)
        return z @ self.coefficients.T


def _geometry_features(a: np.ndarray, b: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Rows ``[1, q, q_i q_j (i <= j)]`` for q = (a, b, L); a, b are (k, 3), L is (k,)."""
    q = np.column_stack([a, b, L])
    iu, ju = np.triu_indices(q.shape[1])
    return np.column_stack([np.ones(len(q), dtype=q.dtype), q, q[:, iu] * q[:, ju]])


@lru_cache(maxsize=None)
def coefficient_map() -> np.ndarray:
    """Integer matrix W with ``coefficients(leg) = features(a, b, L) @ W``.

    Every leg coefficient is a polynomial of degree at most two in the top
    point a, base point b and squared length L. W is recovered from the
    generic builder run on exact integer inputs and checked exactly on all of
    them, so it carries no hand-derived formula.
    """
    mons = generic_support()
    rng = np.random.default_rng(5)
    k = 120
    ab = rng.integers(-9, 10, size=(k, 6))
    Ls = rng.integers(-9, 10, size=k)
    Y = np.array([leg_polynomial(r[:3].tolist(), r[3:].tolist(), int(l)).coefficient_vector(mons)
                  for r, l in zip(ab, Ls)], dtype=object).astype(np.int64)
    Phi = _geometry_features(ab[:, :3], ab[:, 3:], Ls)
    W = np.rint(np.linalg.lstsq(Phi.astype(float), Y.astype(float), rcond=None)[0]).astype(np.int64)
    if not np.array_equal(Phi @ W, Y):
        raise RuntimeError("leg coefficients are not reproduced by a quadratic geometry map")
    W.setflags(write=False)
    return W


def build_polynomial_system(geom: PlatformGeometry, L: LegMeasurements,
                            method: str = "compiled") -> PolynomialSystem:
    """f_1 and the five leg polynomials f_2..f_6.

    ``method="generic"`` expands every leg with sparse polynomial arithmetic;
    ``"compiled"`` evaluates the equivalent integer coefficient map.
    """
    Ls = L.squared_lengths
    if Ls[0] <= 0:
        raise InputValidationError("L_1 must be positive")
    if method == "generic":
        polys = [first_polynomial(float(Ls[0]))]
        for i in range(1, 6):
            polys.append(leg_polynomial(geom.top_points[i].tolist(), geom.base_points[i].tolist(),
                                        float(Ls[i])))
        return PolynomialSystem.from_polynomials(tuple(polys), Ls)
    if method != "compiled":
        raise ValueError(f"unknown build method {method!r}")
    mons = generic_support()
    C = np.empty((6, len(mons)))
    C[0] = first_polynomial(float(Ls[0])).coefficient_vector(mons)
    C[1:] = _geometry_features(geom.top_points[1:], geom.base_points[1:], Ls[1:]) @ coefficient_map()
    return PolynomialSystem(C, Ls, mons)


def residuals(system: PolynomialSystem, points) -> np.ndarray:
    """Normalized Macaulay residuals ||M(F) z / ||z|| || for each row of ``points`` (k x 6)."""
    Z = evaluate_monomials(system.exponents, np.atleast_2d(points))
    Z = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    return np.linalg.norm(Z @ system.normalized_macaulay().T, axis=1)


def normalized_residual(system: PolynomialSystem, candidate: Pose) -> float:
    return float(residuals(system, candidate.point[None, :])[0])
