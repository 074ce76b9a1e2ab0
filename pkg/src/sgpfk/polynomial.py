"""Sparse polynomials over exponent 6-tuples in the variables (u, v, w, x, y, z).

Coefficients may be any ring element supporting ``+`` and ``*`` (float, int,
complex, ``Fraction``); products accumulate in sorted-term order so a build is
bit-reproducible regardless of how the operands were assembled.
"""
from __future__ import annotations

import re
from typing import Iterable, Iterator, Mapping

import numpy as np

VARIABLES = ("u", "v", "w", "x", "y", "z")
NVARS = len(VARIABLES)

Monomial = tuple  # tuple[int, int, int, int, int, int]

ONE: Monomial = (0,) * NVARS

_TOKEN = re.compile(r"([uvwxyz])(?:\^(\d+))?")
_WORD = re.compile(r"(?:[uvwxyz](?:\^\d+)?)+")


def variable(name: str) -> Monomial:
    e = [0] * NVARS
    e[VARIABLES.index(name)] = 1
    return tuple(e)


def parse_monomial(text: str) -> Monomial:
    """Parse ``'zw^2y'`` style notation into an exponent tuple; ``'1'`` is the unit."""
    text = text.strip()
    if text == "1":
        return ONE
    if not _WORD.fullmatch(text):
        raise ValueError(f"cannot parse monomial {text!r}")
    e = [0] * NVARS
    for name, power in _TOKEN.findall(text):
        e[VARIABLES.index(name)] += int(power) if power else 1
    return tuple(e)


def format_monomial(m: Monomial) -> str:
    parts = []
    for name, k in zip(VARIABLES, m):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "".join(parts) or "1"


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(i + j for i, j in zip(a, b))


def mono_div(a: Monomial, b: Monomial) -> Monomial | None:
    """Exact quotient ``a / b`` or None when ``b`` does not divide ``a``."""
    q = tuple(i - j for i, j in zip(a, b))
    if min(q) < 0:
        return None
    return q


def degree(m: Monomial) -> int:
    return sum(m)


def grevlex_key(m: Monomial):
    """Sort key placing monomials in descending graded reverse-lexicographic order."""
    return (-sum(m), tuple(reversed(m)))


def monomial_matrix(monomials: Iterable[Monomial]) -> np.ndarray:
    return np.array(list(monomials), dtype=np.int64).reshape(-1, NVARS)


def evaluate_monomials(exponents: np.ndarray, point) -> np.ndarray:
    """Evaluate each row of ``exponents`` at ``point`` (length-6, real or complex).

    ``point`` may also be a (k, 6) batch, in which case the result is (k, n).
    """
    point = np.asarray(point)
    single = point.ndim == 1
    pts = np.atleast_2d(point)
    maxdeg = int(exponents.max()) if exponents.size else 0
    # powers[k, var, e] = pts[k, var] ** e, built by repeated multiplication
    powers = np.empty(pts.shape + (maxdeg + 1,), dtype=np.result_type(pts, float))
    powers[..., 0] = 1
    for e in range(1, maxdeg + 1):
        powers[..., e] = powers[..., e - 1] * pts
    out = np.ones((pts.shape[0], exponents.shape[0]), dtype=powers.dtype)
    for var in range(NVARS):
        out *= powers[:, var, exponents[:, var]]
    return out[0] if single else out


class Polynomial:
    """Immutable-by-convention map from monomials to coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        self.terms = {}
        if terms:
            for m in sorted(terms):
                c = terms[m]
                if c != 0:
                    self.terms[tuple(m)] = c

    @classmethod
    def _sorted(cls, terms: dict) -> "Polynomial":
        """Wrap a dict whose keys are already in sorted order; zeros are dropped."""
        out = cls.__new__(cls)
        out.terms = {m: c for m, c in terms.items() if c != 0}
        return out

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls({ONE: c})

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls({variable(name): 1})

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __getitem__(self, m: Monomial):
        return self.terms.get(tuple(m), 0)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"{c!r}*{format_monomial(m)}" for m, c in self.terms.items())
        return f"Polynomial({body or '0'})"

    def _coerce(self, other) -> "Polynomial":
        return other if isinstance(other, Polynomial) else Polynomial.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            acc[m] = acc.get(m, 0) + c
        return Polynomial(acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._sorted({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        acc: dict = {}
        rhs = list(other.terms.items())
        for ma, ca in self.terms.items():
            for mb, cb in rhs:
                m = mono_mul(ma, mb)
                acc[m] = acc.get(m, 0) + ca * cb
        return Polynomial(acc)

    __rmul__ = __mul__

    def scale(self, c) -> "Polynomial":
        return Polynomial._sorted({m: c * v for m, v in self.terms.items()})

    def shift(self, m: Monomial) -> "Polynomial":
        return Polynomial._sorted({mono_mul(m, k): c for k, c in self.terms.items()})

    @property
    def support(self) -> tuple:
        return tuple(self.terms)

    @property
    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def coefficient_vector(self, monomials) -> np.ndarray:
        return np.array([self.terms.get(m, 0) for m in monomials])

    def __call__(self, point):
        """Evaluate at a length-6 point (complex-capable)."""
        mons = list(self.terms)
        if not mons:
            return 0
        vals = evaluate_monomials(monomial_matrix(mons), point)
        return np.dot(np.array([self.terms[m] for m in mons]), vals)
