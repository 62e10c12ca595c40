"""Matrices of trigonometric polynomials, plus exact polynomial division.

These carry the symbolic objects of the certification pipeline: the shift
symbol Delta(z), the numerator matrix H(z), the scaled symbol K(z) and the
Kronecker sum W(z).  Determinants and adjugates are computed by cofactor
expansion with memoized minors in exact rational arithmetic; a plain
Leibniz sum is kept as an independent cross-check for the tests.
"""

from __future__ import annotations

from itertools import permutations
from typing import Iterable, List, Sequence

import numpy as np

from .trigpoly import QC, TrigPoly, _as_qc

DET_SIZE_LIMIT = 16


class NotDivisibleError(ArithmeticError):
    """Raised when an exact polynomial quotient does not exist."""


def _det_memoized(M: Sequence[Sequence], zero):
    """Cofactor determinant over any commutative ring.

    Entries need ``+``, ``*``, unary ``-`` and ``is_zero()``.  Expansion
    runs down successive columns, so each minor is identified by its
    surviving row subset alone; minors are memoized on that subset.
    """
    n = len(M)
    memo = {}

    def minor(rows):
        col = n - len(rows)
        if len(rows) == 1:
            return M[rows[0]][col]
        got = memo.get(rows)
        if got is not None:
            return got
        acc = zero
        for k, r in enumerate(rows):
            a = M[r][col]
            if a.is_zero():
                continue
            term = a * minor(rows[:k] + rows[k + 1:])
            acc = acc + term if k % 2 == 0 else acc - term
        memo[rows] = acc
        return acc

    return minor(tuple(range(n)))


def _det_leibniz(M: Sequence[Sequence], zero):
    """Permutation-sum determinant; test oracle for small sizes."""
    n = len(M)
    acc = zero
    for perm in permutations(range(n)):
        inv = sum(
            1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j]
        )
        term = M[0][perm[0]]
        for i in range(1, n):
            term = term * M[i][perm[i]]
        acc = acc + term if inv % 2 == 0 else acc - term
    return acc


class MatTrigPoly:
    """Dense rows x cols matrix with TrigPoly entries sharing one L."""

    __slots__ = ("_rows", "_cols", "_L", "_e")

    def __init__(self, entries: Sequence[Sequence[TrigPoly]]):
        rows = len(entries)
        if rows == 0:
            raise ValueError("empty matrix")
        cols = len(entries[0])
        L = None
        flat: List[TrigPoly] = []
        for row in entries:
            if len(row) != cols:
                raise ValueError("ragged rows")
            for p in row:
                if not isinstance(p, TrigPoly):
                    raise TypeError("entries must be TrigPoly")
                if L is None:
                    L = p.L
                elif p.L != L:
                    raise ValueError("entries disagree on ambient dimension L")
                flat.append(p)
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_cols", cols)
        object.__setattr__(self, "_L", L)
        object.__setattr__(self, "_e", tuple(flat))

    def __setattr__(self, name, value):
        raise AttributeError("MatTrigPoly is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def identity(cls, L: int, k: int) -> "MatTrigPoly":
        one, zero = TrigPoly.one(L), TrigPoly.zero(L)
        return cls([[one if i == j else zero for j in range(k)] for i in range(k)])

    @classmethod
    def zeros(cls, L: int, rows: int, cols: int) -> "MatTrigPoly":
        z = TrigPoly.zero(L)
        return cls([[z] * cols for _ in range(rows)])

    @classmethod
    def diag(cls, entries: Sequence[TrigPoly]) -> "MatTrigPoly":
        L = entries[0].L
        z = TrigPoly.zero(L)
        k = len(entries)
        return cls([[entries[i] if i == j else z for j in range(k)] for i in range(k)])

    @classmethod
    def constant(cls, L: int, rows: Sequence[Sequence]) -> "MatTrigPoly":
        """Lift a matrix of scalars (int/Fraction/str/QC) to constant polys."""
        return cls([[TrigPoly.const(L, _as_qc(x)) for x in row] for row in rows])

    # -- queries -----------------------------------------------------------

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def L(self) -> int:
        return self._L

    @property
    def shape(self):
        return (self._rows, self._cols)

    def __getitem__(self, idx) -> TrigPoly:
        i, j = idx
        if not (0 <= i < self._rows and 0 <= j < self._cols):
            raise IndexError(idx)
        return self._e[i * self._cols + j]

    def row_list(self) -> List[List[TrigPoly]]:
        return [
            list(self._e[i * self._cols:(i + 1) * self._cols])
            for i in range(self._rows)
        ]

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "MatTrigPoly") -> "MatTrigPoly":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return MatTrigPoly([
            [self[i, j] + other[i, j] for j in range(self._cols)]
            for i in range(self._rows)
        ])

    def __sub__(self, other: "MatTrigPoly") -> "MatTrigPoly":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return MatTrigPoly([
            [self[i, j] - other[i, j] for j in range(self._cols)]
            for i in range(self._rows)
        ])

    def __neg__(self) -> "MatTrigPoly":
        return MatTrigPoly([
            [-self[i, j] for j in range(self._cols)] for i in range(self._rows)
        ])

    def __matmul__(self, other: "MatTrigPoly") -> "MatTrigPoly":
        if self._cols != other._rows:
            raise ValueError("inner dimension mismatch")
        out = []
        for i in range(self._rows):
            row = []
            for j in range(other._cols):
                acc = TrigPoly.zero(self._L)
                for k in range(self._cols):
                    a = self[i, k]
                    if a.is_zero():
                        continue
                    b = other[k, j]
                    if b.is_zero():
                        continue
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return MatTrigPoly(out)

    def scale(self, c) -> "MatTrigPoly":
        if isinstance(c, TrigPoly):
            return MatTrigPoly([
                [self[i, j] * c for j in range(self._cols)]
                for i in range(self._rows)
            ])
        c = _as_qc(c)
        return MatTrigPoly([
            [self[i, j] * c for j in range(self._cols)] for i in range(self._rows)
        ])

    def transpose(self) -> "MatTrigPoly":
        return MatTrigPoly([
            [self[j, i] for j in range(self._rows)] for i in range(self._cols)
        ])

    def circle_conj(self) -> "MatTrigPoly":
        """Elementwise pointwise-conjugate on the torus (no transpose)."""
        return MatTrigPoly([
            [self[i, j].circle_conj() for j in range(self._cols)]
            for i in range(self._rows)
        ])

    def kron(self, other: "MatTrigPoly") -> "MatTrigPoly":
        if self._L != other._L:
            raise ValueError("ambient dimension mismatch")
        p, q = other._rows, other._cols
        out = []
        for i in range(self._rows):
            for k in range(p):
                row = []
                for j in range(self._cols):
                    a = self[i, j]
                    row.extend((a * other[k, l]) for l in range(q))
                out.append(row)
        return MatTrigPoly(out)

    # -- determinant machinery -------------------------------------------------

    def _require_square(self):
        if self._rows != self._cols:
            raise ValueError("matrix is not square")

    def det(self, size_limit: int = DET_SIZE_LIMIT) -> TrigPoly:
        """Exact determinant by cofactor expansion with memoized minors."""
        self._require_square()
        if self._rows > size_limit:
            raise ValueError(
                f"symbolic determinant of size {self._rows} exceeds limit "
                f"{size_limit}; refusing"
            )
        return _det_memoized(self.row_list(), TrigPoly.zero(self._L))

    def det_leibniz(self, size_limit: int = 8) -> TrigPoly:
        """Permutation-sum determinant (cross-check oracle, small sizes)."""
        self._require_square()
        if self._rows > size_limit:
            raise ValueError("Leibniz determinant limited to small matrices")
        return _det_leibniz(self.row_list(), TrigPoly.zero(self._L))

    def adjugate(self) -> MatTrigPoly:
        """Signed cofactor transpose: M @ adj(M) = det(M) * I exactly."""
        self._require_square()
        n = self._rows
        if n == 1:
            return MatTrigPoly.identity(self._L, 1)
        rows = self.row_list()
        zero = TrigPoly.zero(self._L)
        out = [[zero] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                sub = [
                    [rows[r][c] for c in range(n) if c != i]
                    for r in range(n) if r != j
                ]
                d = _det_memoized(sub, zero)
                out[i][j] = d if (i + j) % 2 == 0 else -d
        return MatTrigPoly(out)

    # -- evaluation ---------------------------------------------------------------

    def eval(self, z: Sequence[complex]) -> np.ndarray:
        return np.array(
            [
                [self[i, j].eval(z) for j in range(self._cols)]
                for i in range(self._rows)
            ],
            dtype=complex,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatTrigPoly):
            return NotImplemented
        return self.shape == other.shape and self._e == other._e

    def __repr__(self) -> str:
        return f"MatTrigPoly({self._rows}x{self._cols}, L={self._L})"


def exact_div(num: TrigPoly, den: TrigPoly) -> TrigPoly:
    """Exact quotient Q with Q * den == num, or NotDivisibleError.

    Works a lexicographic sweep anchored at the lex-max monomial of the
    divisor: each step cancels the current lex-leading remainder term, so
    when an exact quotient exists the sweep emits its terms in decreasing
    lex order and stops.  When it does not exist, a quotient term lands
    outside the feasible degree box (per variable, the support extremes of
    an exact quotient are forced to ext(num) - ext(den)) and we bail out.
    """
    if den.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if num.is_zero():
        return TrigPoly.zero(num.L)
    if num.L != den.L:
        raise ValueError("dimension mismatch")
    L = num.L

    def extremes(p):
        lo = [min(d[i] for d in p.support()) for i in range(L)]
        hi = [max(d[i] for d in p.support()) for i in range(L)]
        return lo, hi

    nlo, nhi = extremes(num)
    dlo, dhi = extremes(den)
    qlo = [a - b for a, b in zip(nlo, dlo)]
    qhi = [a - b for a, b in zip(nhi, dhi)]
    if any(a > b for a, b in zip(qlo, qhi)):
        raise NotDivisibleError("supports admit no polynomial quotient")

    anchor = max(den.support())
    lead = den.coeff(anchor)
    rem = dict(num.terms())
    quot: dict = {}
    while rem:
        t = max(rem)
        qd = tuple(a - b for a, b in zip(t, anchor))
        if any(x < lo or x > hi for x, lo, hi in zip(qd, qlo, qhi)):
            raise NotDivisibleError(f"no exact quotient (stray term at {t})")
        qc = rem[t] / lead
        quot[qd] = qc
        for d, c in den.terms():
            dd = tuple(a + b for a, b in zip(qd, d))
            acc = rem.get(dd, QC(0)) - qc * c
            if acc.is_zero():
                rem.pop(dd, None)
            else:
                rem[dd] = acc
    return TrigPoly(L, quot)
