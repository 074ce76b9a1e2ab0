"""Numeric template: Macaulay assembly, Schur reduction and PLU elimination."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg import lapack

from .errors import DegenerateInstanceError, StructureError
from .kinematics import PolynomialSystem
from .structure import TemplateStructure

ELIMINATION_ZERO_TOL = 1e-8
PIVOT_TOL = 1e-12


def assemble_macaulay(system: PolynomialSystem, structure: TemplateStructure,
                      include_redundant: bool = False) -> np.ndarray:
    """Coefficients of all shifts ``m * f_j`` against the template columns.

    Rows follow ``structure.row_plan``; columns are
    ``eliminated | excessive | reducible | basic`` and, when
    ``include_redundant`` is set, the dependent excessive columns after them.
    """
    sc = structure.scatter
    ncols = structure.n_columns + (len(structure.redundant) if include_redundant else 0)
    M = np.zeros((structure.n_rows, ncols))
    keep = sc["cols"] < ncols
    M[sc["rows"][keep], sc["cols"][keep]] = system.coefficients.ravel()[sc["src"][keep]]
    return M


@dataclass(frozen=True, eq=False)
class ReducedTemplate:
    """Schur complement ``M22 - M21 M0`` with column blocks E | R | B (| redundant)."""

    matrix: np.ndarray
    n_excessive: int
    n_reducible: int
    n_basic: int

    @property
    def excessive_block(self) -> np.ndarray:
        return self.matrix[:, : self.n_excessive]

    @property
    def sparsity(self) -> float:
        core = self.matrix[:, : self.n_excessive + self.n_reducible + self.n_basic]
        return float(np.mean(core == 0.0))


def m0_offline(structure: TemplateStructure, L1: float) -> np.ndarray:
    """M0 from the precomputed polynomial in L1 (Horner evaluation)."""
    coeffs = structure.m0_coefficients
    out = coeffs[-1].copy()
    for c in reversed(coeffs[:-1]):
        out *= L1
        out += c
    return out


def m0_offline_sparse(structure: TemplateStructure, L1: float, ncols: int | None = None) -> sp.csr_matrix:
    """Same values as :func:`m0_offline`, kept sparse and optionally cut to ``ncols`` columns."""
    pat = structure.m0_sparse
    coeffs = pat["coeffs"]
    data = coeffs[-1].copy()
    for c in coeffs[-2::-1]:
        data *= L1
        data += c
    rows, cols = pat["rows"], pat["cols"]
    nrows, total = pat["shape"]
    if ncols is not None and ncols < total:
        keep = cols < ncols
        rows, cols, data = rows[keep], cols[keep], data[keep]
        total = ncols
    return sp.csr_matrix((data, (rows, cols)), shape=(nrows, total))


def m0_triangular(M: np.ndarray, structure: TemplateStructure) -> np.ndarray:
    """M0 = M11^-1 M12 by back substitution on the unit upper triangular M11."""
    ne = structure.n_eliminated
    M11 = M[:ne, :ne]
    if np.any(np.tril(M11, -1)) or np.any(np.diag(M11) != 1.0):
        raise StructureError("M11 is not unit upper triangular; row/column pairing is broken")
    return sla.solve_triangular(M11, M[:ne, ne:], lower=False, unit_diagonal=True, check_finite=False)


def schur_reduce(M: np.ndarray, structure: TemplateStructure, L1: float,
                 method: str = "offline") -> ReducedTemplate:
    """Eliminate the f_1 shifts: ``M_hat = M22 - M21 @ M0``.

    ``method`` is ``"offline"`` (precomputed polynomial in L1) or
    ``"triangular"`` (per-instance back substitution). Both paths handle the
    redundant columns if ``M`` carries them.
    """
    if L1 == 0:
        raise DegenerateInstanceError("L_1 must be nonzero", stage="template")
    ne = structure.n_eliminated
    if method == "offline":
        # M0 is under one percent dense
        M0 = m0_offline_sparse(structure, L1, M.shape[1] - ne)
        Mhat = M[ne:, ne:] - M[ne:, :ne] @ M0
    elif method == "triangular":
        M0 = m0_triangular(M, structure)
        Mhat = M[ne:, ne:] - M[ne:, :ne] @ M0
    else:
        raise ValueError(f"unknown Schur method {method!r}")
    b = structure.block_sizes
    return ReducedTemplate(Mhat, b["E"], b["R"], b["B"])


@dataclass(frozen=True, eq=False)
class EliminatedBlocks:
    A_R: np.ndarray
    A_B: np.ndarray
    residual_excessive: float  # max |E-block of the bottom rows| / max |M_hat|
    condition: float

    @property
    def shape(self):
        return self.A_R.shape, self.A_B.shape


def plu_eliminate(T: ReducedTemplate, check: bool = True) -> EliminatedBlocks:
    """LU with partial pivoting of the excessive block, applied to the whole template.

    Returns the bottom rows of ``(PL)^-1 M_hat`` restricted to the reducible
    and basic columns.
    """
    A = T.matrix
    nE = T.n_excessive
    nR = T.n_reducible
    nB = T.n_basic
    nrows = A.shape[0]
    if nrows != nE + nR:
        raise StructureError(f"template has {nrows} rows, expected {nE + nR}")
    lu, piv, info = lapack.dgetrf(A[:, :nE])
    if info < 0:
        raise StructureError(f"dgetrf rejected argument {-info}")
    scale = float(np.abs(A).max())
    diag = np.abs(np.diag(lu[:nE, :nE]))
    if info > 0 or diag.min() <= PIVOT_TOL * scale:
        raise DegenerateInstanceError(
            f"excessive block is rank deficient (smallest pivot {diag.min():.3e})", stage="plu")
    perm = np.arange(nrows)
    for i, p in enumerate(piv):
        perm[i], perm[p] = perm[p], perm[i]
    Ap = A[perm]
    L11 = lu[:nE, :nE]
    L21 = lu[nE:, :nE]
    rest = slice(nE, nE + nR + nB)
    top = sla.solve_triangular(L11, Ap[:nE, rest], lower=True, unit_diagonal=True, check_finite=False)
    bottom = Ap[nE:, rest] - L21 @ top
    resid = 0.0
    if check:
        U = np.triu(lu[:nE, :nE])
        resid = float(np.abs(Ap[nE:, :nE] - L21 @ U).max() / scale)
        if resid > ELIMINATION_ZERO_TOL:
            raise DegenerateInstanceError(f"elimination left {resid:.2e} in the excessive block", stage="plu")
    A_R = bottom[:, :nR]
    A_B = bottom[:, nR:]
    return EliminatedBlocks(A_R, A_B, resid, float(np.linalg.cond(A_R)) if check else float("nan"))


def sparsity_pattern(T: ReducedTemplate) -> list[tuple[int, int]]:
    """(row, col) coordinates of nonzero entries, 0-based."""
    r, c = np.nonzero(T.matrix[:, : T.n_excessive + T.n_reducible + T.n_basic])
    return list(zip(r.tolist(), c.tolist()))
