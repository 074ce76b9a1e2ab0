"""Combinatorial skeleton of the elimination template.

Everything here depends only on the shift tables and the generic supports of
the leg polynomials, never on a concrete instance, so the result of
:func:`default_structure` is built once and shared read-only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _shift_tables
from .errors import StructureError
from .kinematics import Pose, first_polynomial, generic_support, leg_polynomial
from .polynomial import (
    ONE,
    format_monomial,
    grevlex_key,
    mono_div,
    mono_mul,
    parse_monomial,
    variable,
)

SHIFT_SIZES = (218, 61, 60, 59, 57, 56)
TEMPLATE_DIMENSIONS = {
    "rows": 511,
    "columns": 580,
    "eliminated": 218,
    "excessive": 255,
    "reducible": 38,
    "basic": 69,
    "reduced_rows": 293,
    "reduced_columns": 362,
}
BASIC_TAIL = ("uw", "vw", "w^2", "xw", "yw", "zw", "w")

W = variable("w")
X2 = tuple(2 * k for k in variable("x"))
Y2 = tuple(2 * k for k in variable("y"))
Z2 = tuple(2 * k for k in variable("z"))
F1_SUPPORT = (X2, Y2, Z2, ONE)

_PRIME = 2147483647  # 2^31 - 1; products of residues fit in int64


@dataclass(frozen=True)
class ShiftTables:
    shifts: tuple  # six tuples of monomials, one per polynomial
    basic: tuple
    action_divisor: tuple = W


def _parse_list(text: str) -> tuple:
    return tuple(parse_monomial(tok) for tok in text.split())


def load_shift_tables() -> ShiftTables:
    """Parse and validate the compiled-in shift sets and basic monomials."""
    shifts = tuple(_parse_list(getattr(_shift_tables, f"A{j}")) for j in range(1, 7))
    basic = _parse_list(_shift_tables.BASIC)
    for j, (A, n) in enumerate(zip(shifts, SHIFT_SIZES), start=1):
        if len(A) != n:
            raise StructureError(f"shift set A{j} has {len(A)} monomials, expected {n}")
        if len(set(A)) != len(A):
            raise StructureError(f"shift set A{j} contains duplicates")
    if len(basic) != 69 or len(set(basic)) != 69:
        raise StructureError(f"basic set corrupt: {len(basic)} entries, {len(set(basic))} distinct")
    if tuple(format_monomial(b) for b in basic[-7:]) != tuple(
        format_monomial(parse_monomial(s)) for s in BASIC_TAIL
    ):
        raise StructureError("basic set does not end with uw, vw, w^2, xw, yw, zw, w")
    return ShiftTables(shifts, basic, parse_monomial(_shift_tables.ACTION_DIVISOR))


@dataclass(frozen=True, eq=False)
class TemplateStructure:
    """Row plan, column partition and index maps of the template.

    Column layout of the assembled matrix is
    ``eliminated | excessive | reducible | basic`` (the ``column_universe``),
    optionally followed by the ``redundant`` excessive columns, which are
    linearly dependent on the kept excessive columns for generic data.
    """

    tables: ShiftTables
    supports: tuple
    row_plan: tuple  # (shift monomial, polynomial index 0..5)
    full_universe: frozenset
    eliminated: tuple
    excessive: tuple
    reducible: tuple
    basic: tuple
    redundant: tuple
    action_map: tuple  # per basic monomial: ("basic", j) or ("reducible", j)
    m0_coefficients: tuple  # M0(L1) = sum_k L1^k * m0_coefficients[k]
    scatter: dict  # flat index arrays for assembly
    m0_sparse: dict  # nonzero pattern of M0 with per-entry coefficients in L1

    @property
    def column_universe(self) -> tuple:
        return self.eliminated + self.excessive + self.reducible + self.basic

    @property
    def n_rows(self) -> int:
        return len(self.row_plan)

    @property
    def n_columns(self) -> int:
        return len(self.eliminated) + len(self.excessive) + len(self.reducible) + len(self.basic)

    @property
    def n_eliminated(self) -> int:
        return len(self.eliminated)

    @property
    def reduced_shape(self) -> tuple:
        return (self.n_rows - self.n_eliminated, self.n_columns - self.n_eliminated)

    @property
    def block_sizes(self) -> dict:
        return {"E": len(self.excessive), "R": len(self.reducible), "B": len(self.basic)}

    def column_index(self) -> dict:
        cols = self.column_universe + self.redundant
        return {m: k for k, m in enumerate(cols)}


def _sorted_f1_rows(shifts_f1):
    # decreasing x-degree of the pivot column x^2 m; Python's sort is stable
    return sorted(shifts_f1, key=lambda m: -m[3])


def _modp_pivot_columns(M: np.ndarray) -> list:
    """Pivot columns of the row echelon form of an int64 matrix over GF(p)."""
    A = np.mod(M, _PRIME)
    nrows, ncols = A.shape
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        inv = pow(int(A[r, c]), _PRIME - 2, _PRIME)
        A[r] = (A[r] * inv) % _PRIME
        below = r + 1 + np.flatnonzero(A[r + 1:, c])
        if below.size:
            A[below] = (A[below] - (A[below, c][:, None] * A[r][None, :]) % _PRIME) % _PRIME
        pivots.append(c)
        r += 1
    return pivots


def _integer_instance(seed: int):
    """Integer-coefficient leg polynomials for exact generic-rank computations."""
    rng = np.random.default_rng(seed)
    top = rng.integers(-40, 41, size=(6, 3)).tolist()
    base = rng.integers(-40, 41, size=(6, 3)).tolist()
    L = rng.integers(1, 500, size=6).tolist()
    return [first_polynomial(L[0])] + [leg_polynomial(top[i], base[i], L[i]) for i in range(1, 6)]


def _excessive_basis(row_plan, eliminated, candidates, seed=7):
    columns = list(eliminated) + list(candidates)
    col = {m: k for k, m in enumerate(columns)}
    polys = _integer_instance(seed)
    M = np.zeros((len(row_plan), len(columns)), dtype=np.int64)
    for r, (m, j) in enumerate(row_plan):
        for s, c in polys[j].terms.items():
            k = col.get(mono_mul(m, s))
            if k is not None:
                M[r, k] = int(c) % _PRIME
    pivots = _modp_pivot_columns(M)
    ne = len(eliminated)
    if pivots[:ne] != list(range(ne)):
        raise StructureError("eliminated columns are not independent in the excessive block")
    kept = {columns[k] for k in pivots[ne:]}
    return (tuple(m for m in candidates if m in kept),
            tuple(m for m in candidates if m not in kept))


def _poly_matmul(A, B):
    """Product of matrix polynomials given as coefficient lists in L1."""
    out = [None] * (len(A) + len(B) - 1)
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            term = a @ b
            out[i + j] = term if out[i + j] is None else out[i + j] + term
    return out


def _m0_coefficients(row_plan, eliminated, rest):
    """Offline M0 = M11^-1 M12 as a polynomial in L1.

    On f_1 rows the matrix is K0 + L1*K1 with K0 carrying the unit coefficients
    of x^2, y^2, z^2 and K1 the -1 of the constant term. Under the row/column
    pairing M11 = I + N with N strictly upper triangular (nilpotent), so the
    Neumann series terminates.
    """
    ne = len(eliminated)
    col = {m: k for k, m in enumerate(list(eliminated) + list(rest))}
    K0 = np.zeros((ne, len(col)), dtype=np.int64)
    K1 = np.zeros_like(K0)
    for r in range(ne):
        m, j = row_plan[r]
        for s in (X2, Y2, Z2):
            K0[r, col[mono_mul(m, s)]] = 1
        K1[r, col[m]] = -1
    N = [K0[:, :ne] - np.eye(ne, dtype=np.int64), K1[:, :ne]]
    if np.any(np.tril(N[0])) or np.any(np.tril(N[1])):
        raise StructureError("M11 is not unit upper triangular under the row/column pairing")
    # small integers: float64 products are exact and use BLAS
    C = [K0[:, ne:].astype(float), K1[:, ne:].astype(float)]
    neg_N = [-a.astype(float) for a in N]
    total = [c.copy() for c in C]
    term = C
    for _ in range(ne):
        term = _poly_matmul(neg_N, term)
        if not any(np.any(a) for a in term):
            break
        for k, a in enumerate(term):
            if k < len(total):
                total[k] = total[k] + a
            else:
                total.append(a.copy())
    else:
        raise StructureError("Neumann series for M11^-1 did not terminate")
    while len(total) > 1 and not np.any(total[-1]):
        total.pop()
    out = []
    for a in total:
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


def _m0_sparse(m0) -> dict:
    """Coordinates of every entry of M0 that is nonzero for some L1, row-major."""
    stack = np.stack(m0)
    rows, cols = np.nonzero(np.any(stack != 0, axis=0))
    return {"rows": rows, "cols": cols, "coeffs": stack[:, rows, cols], "shape": stack.shape[1:]}


def _scatter(row_plan, supports, col_index, generic):
    gpos = {m: k for k, m in enumerate(generic)}
    rows, cols, src = [], [], []
    for r, (m, j) in enumerate(row_plan):
        for s in supports[j]:
            c = col_index.get(mono_mul(m, s))
            if c is None:
                raise StructureError(f"shifted monomial {format_monomial(mono_mul(m, s))} missing from universe")
            rows.append(r)
            cols.append(c)
            src.append(j * len(generic) + gpos[s])
    return {"rows": np.array(rows), "cols": np.array(cols), "src": np.array(src)}


def build_structure(tables: ShiftTables | None = None, supports=None,
                    expected: dict | None = TEMPLATE_DIMENSIONS) -> TemplateStructure:
    """Derive the template skeleton and check every cardinality against ``expected``."""
    tables = load_shift_tables() if tables is None else tables
    generic = generic_support()
    if supports is None:
        supports = (F1_SUPPORT,) + (generic,) * 5
    if set(supports[0]) != set(F1_SUPPORT):
        raise StructureError("first polynomial must have support {x^2, y^2, z^2, 1}")

    def check(name, value):
        if expected is not None and name in expected and value != expected[name]:
            raise StructureError(f"{name}: got {value}, expected {expected[name]}")

    f1_rows = _sorted_f1_rows(tables.shifts[0])
    row_plan = tuple((m, 0) for m in f1_rows) + tuple(
        (m, j) for j in range(1, 6) for m in tables.shifts[j])
    check("rows", len(row_plan))

    full = frozenset(mono_mul(m, s) for m, j in row_plan for s in supports[j])

    basic = tuple(tables.basic)
    Bset = set(basic)
    quotients = []
    for b in basic:
        q = mono_div(b, tables.action_divisor)
        if q is None:
            raise StructureError(f"basic monomial {format_monomial(b)} is not divisible by the action divisor")
        quotients.append(q)
    reducible = tuple(sorted(set(quotients) - Bset, key=grevlex_key))
    check("basic", len(basic))
    check("reducible", len(reducible))
    missing = [m for m in basic + reducible if m not in full]
    if missing:
        raise StructureError(f"{len(missing)} basic/reducible monomials absent from the template support")
    Ridx = {m: k for k, m in enumerate(reducible)}
    Bidx = {m: k for k, m in enumerate(basic)}
    action_map = tuple(("basic", Bidx[q]) if q in Bidx else ("reducible", Ridx[q]) for q in quotients)

    eliminated = tuple(mono_mul(X2, m) for m, _ in row_plan[: len(f1_rows)])
    check("eliminated", len(eliminated))
    if len(set(eliminated)) != len(eliminated):
        raise StructureError("eliminated columns x^2*m are not distinct")
    if not set(eliminated) <= full:
        raise StructureError("eliminated column outside the template support")
    if set(eliminated) & (Bset | set(reducible)):
        raise StructureError("eliminated columns overlap the basic/reducible blocks")

    candidates = tuple(sorted(full - set(eliminated) - Bset - set(reducible), key=grevlex_key))
    excessive, redundant = _excessive_basis(row_plan, eliminated, candidates)
    check("excessive", len(excessive))
    ncols = len(eliminated) + len(excessive) + len(reducible) + len(basic)
    check("columns", ncols)
    check("reduced_rows", len(row_plan) - len(eliminated))
    check("reduced_columns", ncols - len(eliminated))

    rest = excessive + reducible + basic + redundant
    m0 = _m0_coefficients(row_plan, eliminated, rest)
    col_index = {m: k for k, m in enumerate(eliminated + rest)}
    scatter = _scatter(row_plan, supports, col_index, generic)

    return TemplateStructure(
        tables=tables,
        supports=tuple(tuple(s) for s in supports),
        row_plan=row_plan,
        full_universe=full,
        eliminated=eliminated,
        excessive=excessive,
        reducible=reducible,
        basic=basic,
        redundant=redundant,
        action_map=action_map,
        m0_coefficients=m0,
        scatter=scatter,
        m0_sparse=_m0_sparse(m0),
    )


@lru_cache(maxsize=1)
def default_structure() -> TemplateStructure:
    return build_structure()


def monomial_eval(m, pose: Pose):
    """Value of the monomial at (u, v, w, x, y, z) of ``pose``."""
    value = 1
    for base, k in zip(pose.point, m):
        for _ in range(k):
            value = value * base
    return value


def describe(structure: TemplateStructure) -> dict:
    """Plain-data dump of the skeleton, suitable for JSON and diffing."""
    fmt = lambda ms: [format_monomial(m) for m in ms]  # noqa: E731
    rows, cols = structure.n_rows, structure.n_columns
    return {
        "shift_set_sizes": [len(a) for a in structure.tables.shifts],
        "template_shape": [rows, cols],
        "full_support_size": len(structure.full_universe),
        "reduced_shape": list(structure.reduced_shape),
        "block_sizes": structure.block_sizes,
        "redundant_columns": len(structure.redundant),
        "basic_tail": fmt(structure.basic[-7:]),
        "action_divisor": format_monomial(structure.tables.action_divisor),
        "row_plan": [[format_monomial(m), j + 1] for m, j in structure.row_plan],
        "eliminated": fmt(structure.eliminated),
        "excessive": fmt(structure.excessive),
        "reducible": fmt(structure.reducible),
        "basic": fmt(structure.basic),
        "redundant": fmt(structure.redundant),
        "action_map": [[format_monomial(b), kind, j] for b, (kind, j) in zip(structure.basic, structure.action_map)],
        "m0_degree_in_L1": len(structure.m0_coefficients) - 1,
    }
