"""Exact sparse trigonometric (Laurent) polynomials on the unit multicircle.

A trigonometric polynomial in L circle variables is a finite sum

    f(z) = sum_d  f_d * z_1^{d_1} * ... * z_L^{d_L},    d in Z^L,

with every z_i confined to the unit circle |z_i| = 1.  Coefficients are
exact complex rationals (pairs of ``fractions.Fraction``): the symbolic
pipeline built on top of this module -- determinants, characteristic
polynomials, the Routh-style clearing recursion, exact divisions -- turns
rounding noise into wrong answers, so floating point only enters when a
polynomial is finally evaluated or handed to the SDP layer.

Example::

    >>> p = TrigPoly.monomial(1, (1,), QC(1, 0)) + TrigPoly.const(1, 2)
    >>> q = p * p.circle_conj()
    >>> q.coeff((0,))
    QC(5, 0)
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Tuple

Degree = Tuple[int, ...]

_CIRCLE_TOL = 1e-12


def _frac(x) -> Fraction:
    """Coerce ints, Fractions, floats and strings like '1/4' or '0.25'."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # floats convert exactly (binary expansion); decimal strings are
        # the preferred way to say "0.1" and mean a tenth.
        return Fraction(x)
    return Fraction(x)


class QC:
    """An exact complex rational ``re + im*i``.

    Both parts are ``fractions.Fraction``; all arithmetic is exact,
    including division.  Instances are immutable.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _frac(re))
        object.__setattr__(self, "im", _frac(im))

    def __setattr__(self, name, value):
        raise AttributeError("QC is immutable")

    @classmethod
    def from_complex(cls, z: complex) -> "QC":
        """Exact rationalization of a float complex (binary expansion)."""
        return cls(Fraction(float(z.real)), Fraction(float(z.imag)))

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __add__(self, other) -> "QC":
        other = _as_qc(other)
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other) -> "QC":
        other = _as_qc(other)
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other) -> "QC":
        return _as_qc(other) - self

    def __mul__(self, other) -> "QC":
        other = _as_qc(other)
        return QC(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "QC":
        other = _as_qc(other)
        den = other.re * other.re + other.im * other.im
        if not den:
            raise ZeroDivisionError("division by zero QC")
        return QC(
            (self.re * other.re + self.im * other.im) / den,
            (self.im * other.re - self.re * other.im) / den,
        )

    def __rtruediv__(self, other) -> "QC":
        return _as_qc(other) / self

    def __neg__(self) -> "QC":
        return QC(-self.re, -self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QC(other)
        if not isinstance(other, QC):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"QC({self.re}, {self.im})"


def _as_qc(x) -> QC:
    if isinstance(x, QC):
        return x
    if isinstance(x, (int, Fraction, str, float)):
        return QC(x)
    if isinstance(x, complex):
        return QC.from_complex(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to QC")


QC_ZERO = QC(0)
QC_ONE = QC(1)


class TrigPoly:
    """Sparse Laurent polynomial keyed by integer degree tuples.

    The coefficient map never stores zeros and iterates in sorted degree
    order, so equal polynomials have identical in-memory layouts and
    serialization is canonical.  Instances are immutable: every operation
    returns a fresh polynomial.
    """

    __slots__ = ("_L", "_c", "_herm")

    def __init__(self, L: int, coeffs: Mapping[Degree, QC] | None = None,
                 *, hermitian: bool | None = None):
        if L < 1:
            raise ValueError("ambient dimension L must be >= 1")
        clean = {}
        if coeffs:
            for d in sorted(coeffs):
                c = _as_qc(coeffs[d])
                if c.is_zero():
                    continue
                d = tuple(int(x) for x in d)
                if len(d) != L:
                    raise ValueError(f"degree tuple {d} has length != L={L}")
                clean[d] = c
        object.__setattr__(self, "_L", L)
        object.__setattr__(self, "_c", clean)
        herm = all(
            clean.get(tuple(-x for x in d)) == c.conjugate()
            for d, c in clean.items()
        )
        if hermitian and not herm:
            raise ValueError("coefficients violate Hermitian symmetry")
        object.__setattr__(self, "_herm", herm)

    def __setattr__(self, name, value):
        raise AttributeError("TrigPoly is immutable")

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, L: int) -> "TrigPoly":
        return cls(L)

    @classmethod
    def one(cls, L: int) -> "TrigPoly":
        return cls(L, {(0,) * L: QC_ONE})

    @classmethod
    def const(cls, L: int, c) -> "TrigPoly":
        return cls(L, {(0,) * L: _as_qc(c)})

    @classmethod
    def monomial(cls, L: int, d: Iterable[int], c=1) -> "TrigPoly":
        return cls(L, {tuple(d): _as_qc(c)})

    # -- basic queries ---------------------------------------------------

    @property
    def L(self) -> int:
        return self._L

    @property
    def hermitian(self) -> bool:
        return self._herm

    def coeff(self, d: Iterable[int]) -> QC:
        return self._c.get(tuple(d), QC_ZERO)

    def terms(self) -> Iterator[Tuple[Degree, QC]]:
        return iter(self._c.items())

    def support(self) -> Iterator[Degree]:
        return iter(self._c.keys())

    def num_terms(self) -> int:
        return len(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def is_constant(self) -> bool:
        return all(all(x == 0 for x in d) for d in self._c)

    def constant_value(self) -> QC:
        """The d = 0 coefficient (valid whether or not the poly is constant)."""
        return self.coeff((0,) * self._L)

    @property
    def degree(self) -> Degree:
        """Per-variable max |d_i| over the support; all-zero for 0 and constants."""
        n = [0] * self._L
        for d in self._c:
            for i, x in enumerate(d):
                if abs(x) > n[i]:
                    n[i] = abs(x)
        return tuple(n)

    def has_real_coeffs(self) -> bool:
        return all(c.is_real() for c in self._c.values())

    def is_nonpositive_constant(self) -> bool:
        """True iff the polynomial is a real constant <= 0 (zero included)."""
        if not self.is_constant():
            return False
        c = self.constant_value()
        return c.is_real() and c.re <= 0

    # -- arithmetic -------------------------------------------------------

    def _check_dim(self, other: "TrigPoly"):
        if self._L != other._L:
            raise ValueError(f"dimension mismatch: {self._L} vs {other._L}")

    def __add__(self, other) -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        self._check_dim(other)
        out = dict(self._c)
        for d, c in other._c.items():
            out[d] = out.get(d, QC_ZERO) + c
        return TrigPoly(self._L, out)

    def __sub__(self, other) -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        self._check_dim(other)
        out = dict(self._c)
        for d, c in other._c.items():
            out[d] = out.get(d, QC_ZERO) - c
        return TrigPoly(self._L, out)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(self._L, {d: -c for d, c in self._c.items()})

    def __mul__(self, other) -> "TrigPoly":
        if isinstance(other, TrigPoly):
            self._check_dim(other)
            out: dict = {}
            for da, ca in self._c.items():
                for db, cb in other._c.items():
                    d = tuple(a + b for a, b in zip(da, db))
                    prev = out.get(d)
                    out[d] = ca * cb if prev is None else prev + ca * cb
            return TrigPoly(self._L, out)
        c = _as_qc(other)
        return TrigPoly(self._L, {d: v * c for d, v in self._c.items()})

    def __rmul__(self, other) -> "TrigPoly":
        return self.__mul__(other)

    def circle_conj(self) -> "TrigPoly":
        """Pointwise complex conjugate on the torus: coeff(d) -> conj(coeff(-d))."""
        return TrigPoly(
            self._L,
            {tuple(-x for x in d): c.conjugate() for d, c in self._c.items()},
        )

    # -- evaluation --------------------------------------------------------

    def eval(self, z: Sequence[complex]) -> complex:
        """Evaluate at a point of the unit multicircle in double precision."""
        z = [complex(v) for v in z]
        if len(z) != self._L:
            raise ValueError(f"expected {self._L} circle variables, got {len(z)}")
        for v in z:
            if abs(abs(v) - 1.0) > _CIRCLE_TOL:
                raise ValueError(f"point off the unit circle: |{v}| = {abs(v)}")
        total = 0j
        for d, c in self._c.items():
            m = 1 + 0j
            for v, e in zip(z, d):
                if e:
                    m *= v ** e
            total += complex(c) * m
        return total

    def eval_theta(self, theta: Sequence[float]) -> complex:
        """Evaluate at z_i = exp(i*theta_i)."""
        return self.eval([cmath.exp(1j * t) for t in theta])

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form: 'L <dim>' header, then one term per line.

        Each term reads ``re_num/re_den/im_num/im_den@d1,d2,...,dL``.
        Round-trips byte-for-byte through :meth:`from_text`.
        """
        lines = [f"L {self._L}"]
        for d, c in self._c.items():
            lines.append(
                f"{c.re.numerator}/{c.re.denominator}/"
                f"{c.im.numerator}/{c.im.denominator}@"
                + ",".join(str(x) for x in d)
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrigPoly":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0].startswith("L "):
            raise ValueError("missing 'L <dim>' header")
        L = int(lines[0][2:])
        coeffs: dict = {}
        for ln in lines[1:]:
            try:
                num, deg = ln.split("@")
                rn, rd, im_n, im_d = num.split("/")
                d = tuple(int(x) for x in deg.split(","))
            except ValueError as exc:
                raise ValueError(f"malformed term line {ln!r}") from exc
            c = QC(Fraction(int(rn), int(rd)), Fraction(int(im_n), int(im_d)))
            if d in coeffs:
                raise ValueError(f"duplicate degree {d}")
            coeffs[d] = c
        return cls(L, coeffs)

    # -- misc ---------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self._L == other._L and self._c == other._c

    def __hash__(self):
        return hash((self._L, tuple(self._c.items())))

    def __repr__(self) -> str:
        if not self._c:
            return f"TrigPoly({self._L}, 0)"
        bits = []
        for d, c in list(self._c.items())[:6]:
            mono = "*".join(
                f"z{i + 1}^{e}" for i, e in enumerate(d) if e
            ) or "1"
            if c.is_real():
                bits.append(f"{c.re}*{mono}")
            else:
                bits.append(f"({c.re}{'+' if c.im >= 0 else ''}{c.im}i)*{mono}")
        if len(self._c) > 6:
            bits.append(f"... {len(self._c)} terms")
        return f"TrigPoly({self._L}, {' + '.join(bits)})"
