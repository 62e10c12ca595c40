"""Sum-of-squares positivity certificates for trigonometric polynomials.

A Hermitian trigonometric polynomial F is globally positive on the unit
L-circle when F - eps admits a Gram representation

    F(z) - eps = p^T(z^{-1}) . G . p(z),     G PSD,

with the monomial basis p(z) = p(z_L) (x) ... (x) p(z_1), where each factor
is (1, z_i, ..., z_i^nhat_i).  Coefficients are extracted linearly through
elementary Toeplitz patterns: tr[T(d) G] equals the coefficient of z^d.
This module assembles the corresponding semidefinite programs (a global
one, and a domain-restricted one whose multipliers absorb periodic-
direction constraints), extracts certificates from solver output, and
re-verifies certificates in exact rational arithmetic so that nothing
rests on floating-point solver claims.

Conventions fixed here (and relied on by the exact verifier):

* basis index j decomposes with the z_1 exponent varying fastest;
* T(d) has ones at index pairs (r, c) with exponent(r) - exponent(c) = d,
  which is what makes tr[T(d) G] = f(d) for complex Hermitian G;
* complex Hermitian Gram blocks are searched through the real symmetric
  embedding E = [[Re G, -Im G], [Im G, Re G]]; any symmetric PSD E yields
  the Hermitian PSD G = (A + C)/2 + i(B^T - B)/2 for its four blocks, so
  no structural constraints on E are needed;
* polynomials with all-real coefficients use a real symmetric Gram block
  directly (half the dimension): averaging G with its conjugate shows a
  real certificate exists whenever any does.
"""

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from . import sdpsolver
from .sdpsolver import FREE, SdpProblem
from .trigpoly import QC, TrigPoly

__all__ = [
    "GramBasisSpec",
    "DomainPoly",
    "Certificate",
    "VerificationReport",
    "InfeasibleDegreeLedger",
    "toeplitz_T",
    "build_domain_polys",
    "assemble_global_sdp",
    "assemble_domain_sdp",
    "extract_certificate",
    "verify_certificate",
    "certificate_to_json",
    "certificate_from_json",
    "finite_grid_positivity",
]


class InfeasibleDegreeLedger(ValueError):
    """A multiplier Gram degree came out negative; raise the slack."""


# ---------------------------------------------------------------------------
# Gram basis bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GramBasisSpec:
    """Monomial basis (1, z_i, ..., z_i^nhat_i) per variable, Kroneckered."""

    nhat: tuple
    Nhat: int

    @classmethod
    def from_degrees(cls, nhat):
        nhat = tuple(int(n) for n in nhat)
        if any(n < 0 for n in nhat):
            raise ValueError("basis degrees must be nonnegative")
        size = 1
        for n in nhat:
            size *= n + 1
        return cls(nhat=nhat, Nhat=size)

    @property
    def strides(self):
        """Index strides; the first variable's exponent varies fastest."""
        strides = []
        acc = 1
        for n in self.nhat:
            strides.append(acc)
            acc *= n + 1
        return tuple(strides)

    def exponent(self, j):
        """Per-variable exponents of basis element j."""
        out = []
        for n in self.nhat:
            out.append(j % (n + 1))
            j //= n + 1
        return tuple(out)


def _toeplitz_pairs(d, nhat):
    """Index pairs (r, c) with exponent(r) - exponent(c) = d.

    These are exactly the positions of the ones of T(d).  Raises if any
    |d_i| exceeds nhat_i (no representable pair).
    """
    d = tuple(int(x) for x in d)
    nhat = tuple(int(n) for n in nhat)
    if len(d) != len(nhat):
        raise ValueError("degree and basis dimension mismatch")
    per_dim = []
    for di, ni in zip(d, nhat):
        if abs(di) > ni:
            raise ValueError(f"degree component {di} outside basis range {ni}")
        lo = max(0, -di)
        hi = min(ni, ni - di)
        per_dim.append([(c + di, c) for c in range(lo, hi + 1)])
    strides = GramBasisSpec.from_degrees(nhat).strides
    for combo in itertools.product(*per_dim):
        r = sum(rc[0] * s for rc, s in zip(combo, strides))
        c = sum(rc[1] * s for rc, s in zip(combo, strides))
        yield r, c


def toeplitz_T(d, nhat):
    """Dense 0/1 elementary Toeplitz pattern T(d) for the given basis.

    Built as T_L(d_L) (x) ... (x) T_1(d_1); the orientation (ones where
    the row exponent exceeds the column exponent by d) is the one for
    which tr[T(d) G] reads off the coefficient of z^d from
    p^T(z^{-1}) G p(z), including for complex Hermitian G.
    """
    spec = GramBasisSpec.from_degrees(nhat)
    T = np.zeros((spec.Nhat, spec.Nhat))
    for r, c in _toeplitz_pairs(d, nhat):
        T[r, c] = 1.0
    return T


def _half_box(nhat):
    """d = 0 followed by the lexicographically positive half of the box."""
    zero = tuple(0 for _ in nhat)
    yield zero
    ranges = [range(-n, n + 1) for n in nhat]
    for d in itertools.product(*ranges):
        if d > zero:
            yield d


# ---------------------------------------------------------------------------
# domain polynomials for periodic directions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainPoly:
    """Hermitian polynomial whose nonnegativity locus is a root-of-unity set.

    D(z) = (z^N + z^{-N})/2 - 1 = Re(z^N) - 1 is real on the circle,
    nonpositive everywhere, and zero exactly at the N-th roots of unity,
    so {D >= 0} describes the periodic direction's frequency set.
    """

    D: TrigPoly
    period: int


def build_domain_polys(directions, num_infinite):
    """One DomainPoly per periodic direction (directions beyond the first
    ``num_infinite``, which must all be periodic)."""
    from .model import PERIODIC

    L = len(directions)
    polys = []
    for axis in range(num_infinite, L):
        spec = directions[axis]
        if hasattr(spec, "kind"):
            if spec.kind != PERIODIC:
                raise ValueError(
                    f"direction {axis + 1} must be periodic, got {spec.kind}")
            period = spec.period
        else:
            period = int(spec)
        if period is None or period < 1:
            raise ValueError(f"direction {axis + 1} lacks a valid period")
        mono = [0] * L
        mono[axis] = period
        coeffs = {
            tuple(mono): QC(Fraction(1, 2)),
            tuple(-m for m in mono): QC(Fraction(1, 2)),
            tuple([0] * L): QC(Fraction(-1)),
        }
        polys.append(DomainPoly(D=TrigPoly(L, coeffs), period=period))
    return polys


# ---------------------------------------------------------------------------
# constraint-row generators
# ---------------------------------------------------------------------------


def _accumulate(dest, key, value):
    dest[key] = dest.get(key, 0.0) + value


def _real_row(dest, block, d, nhat, scale):
    """Entries of <sym(T(d)), G> on a real symmetric block, scaled."""
    for r, c in _toeplitz_pairs(d, nhat):
        if r == c:
            _accumulate(dest, (block, r, r), scale)
        else:
            _accumulate(dest, (block, min(r, c), max(r, c)), 0.5 * scale)


def _complex_rows(re_dest, im_dest, block, d, nhat, size, scale):
    """Entries for Re/Im of scale * tr[T(d) G] on an embedded block.

    With E = [[A, B], [B^T, C]] and G = (A + C)/2 + i(B^T - B)/2:
        Re tr[T G] = sum over ones (r, c) of (E[c,r] + E[s+c, s+r]) / 2
        Im tr[T G] = sum over ones (r, c) of (E[r,s+c] - E[c,s+r]) / 2
    and a stored off-diagonal coefficient v acts on the symmetric pair,
    contributing 2v per entry.
    """
    s = size
    for r, c in _toeplitz_pairs(d, nhat):
        if r == c:
            _accumulate(re_dest, (block, r, r), 0.5 * scale)
            _accumulate(re_dest, (block, s + r, s + r), 0.5 * scale)
        else:
            i, j = min(r, c), max(r, c)
            _accumulate(re_dest, (block, i, j), 0.25 * scale)
            _accumulate(re_dest, (block, s + i, s + j), 0.25 * scale)
            _accumulate(im_dest, (block, r, s + c), 0.25 * scale)
            _accumulate(im_dest, (block, c, s + r), -0.25 * scale)


def _entries(acc):
    return [(b, i, j, v) for (b, i, j), v in acc.items() if v != 0.0]


# ---------------------------------------------------------------------------
# SDP assembly
# ---------------------------------------------------------------------------


def _validate_slack(slack, L):
    slack = tuple(int(e) for e in slack)
    if len(slack) != L:
        raise ValueError(f"slack must have {L} components")
    if any(e < 0 for e in slack):
        raise ValueError("slack components must be nonnegative")
    return slack


def assemble_global_sdp(F, slack):
    """SDP for: maximize eps with F - eps admitting a PSD Gram matrix.

    The Gram basis degree is deg(F) + slack per variable; every degree in
    the representable box is constrained (coefficients outside F's support
    match zero).  Returns an SdpProblem whose ``info`` attribute records
    the block layout for certificate extraction.
    """
    if not F.hermitian:
        raise ValueError("polynomial must be Hermitian")
    slack = _validate_slack(slack, F.L)
    nhat = tuple(n + e for n, e in zip(F.degree, slack))
    spec = GramBasisSpec.from_degrees(nhat)
    real_mode = F.has_real_coeffs()
    block_dim = spec.Nhat if real_mode else 2 * spec.Nhat
    prob = SdpProblem([block_dim], free_vars=1)
    zero = tuple(0 for _ in nhat)
    for d in _half_box(nhat):
        fd = complex(F.coeff(d))
        re_acc, im_acc = {}, {}
        if real_mode:
            _real_row(re_acc, 0, d, nhat, 1.0)
        else:
            _complex_rows(re_acc, im_acc, 0, d, nhat, spec.Nhat, 1.0)
        re_row = _entries(re_acc)
        if d == zero:
            re_row.append((FREE, 0, 0, 1.0))
        prob.add_constraint(re_row, fd.real)
        if not real_mode and any(d):
            prob.add_constraint(_entries(im_acc), fd.imag)
    prob.set_objective([(FREE, 0, 0, 1.0)])
    prob.info = {
        "mode": "real" if real_mode else "complex",
        "block_specs": [spec],
        "groups": 1,
        "blocks_per_group": 1,
    }
    return prob


def _ceil_half(v):
    return (v + 1) // 2


def assemble_domain_sdp(F_list, D_list, slack):
    """SDP for shared-eps positivity of every F_k on the domain cut out by
    the D polynomials:

        F_k - eps = H_{k,0} + sum_i D_i * H_{k,i},   all H Gram-PSD.

    Gram degrees follow the ledger: n_k = ceil(max(deg F_k, deg D_i) / 2)
    per variable, deg G_{k,0} = 2 (n_k + slack), deg G_{k,i} = deg G_{k,0}
    - deg D_i.  A negative multiplier degree raises InfeasibleDegreeLedger
    (increase the slack).
    """
    F_list = list(F_list)
    D_list = list(D_list)
    if not F_list:
        raise ValueError("need at least one polynomial")
    if not D_list:
        raise ValueError("need at least one domain polynomial")
    L = F_list[0].L
    for F in F_list:
        if F.L != L:
            raise ValueError("all polynomials must share the variable count")
        if not F.hermitian:
            raise ValueError("polynomials must be Hermitian")
    for dom in D_list:
        if dom.D.L != L:
            raise ValueError("domain polynomials must share the variable count")
    slack = _validate_slack(slack, L)

    real_mode = all(F.has_real_coeffs() for F in F_list)
    deg_D = [dom.D.degree for dom in D_list]

    specs = []       # flat block specs, order (k, 0), (k, 1), ...
    layouts = []     # per k: (nhat0, [nhat_i ...])
    for k, F in enumerate(F_list):
        deg_F = F.degree
        n_k = tuple(
            _ceil_half(max((deg_F[v],) + tuple(dd[v] for dd in deg_D)))
            for v in range(L)
        )
        nhat0 = tuple(2 * (n + e) for n, e in zip(n_k, slack))
        nhat_mult = []
        for i, dd in enumerate(deg_D):
            nh = tuple(a - b for a, b in zip(nhat0, dd))
            if any(x < 0 for x in nh):
                raise InfeasibleDegreeLedger(
                    f"multiplier Gram degree {nh} for polynomial {k}, "
                    f"domain {i} has a negative component; increase slack")
            nhat_mult.append(nh)
        layouts.append((nhat0, nhat_mult))
        specs.append(GramBasisSpec.from_degrees(nhat0))
        specs.extend(GramBasisSpec.from_degrees(nh) for nh in nhat_mult)

    dims = [(s.Nhat if real_mode else 2 * s.Nhat) for s in specs]
    prob = SdpProblem(dims, free_vars=1)
    bpk = 1 + len(D_list)
    zero = tuple(0 for _ in range(L))

    for k, F in enumerate(F_list):
        nhat0, nhat_mult = layouts[k]
        for d in _half_box(nhat0):
            fd = complex(F.coeff(d))
            re_acc, im_acc = {}, {}
            blk0 = k * bpk
            size0 = specs[blk0].Nhat
            if real_mode:
                _real_row(re_acc, blk0, d, nhat0, 1.0)
            else:
                _complex_rows(re_acc, im_acc, blk0, d, nhat0, size0, 1.0)
            for i, dom in enumerate(D_list):
                blk = blk0 + 1 + i
                nh = nhat_mult[i]
                size = specs[blk].Nhat
                for dD, cD in dom.D.terms():
                    d2 = tuple(a - b for a, b in zip(d, dD))
                    if any(abs(x) > n for x, n in zip(d2, nh)):
                        continue
                    scale = float(Fraction(cD.re))
                    if real_mode:
                        _real_row(re_acc, blk, d2, nh, scale)
                    else:
                        _complex_rows(re_acc, im_acc, blk, d2, nh, size, scale)
            re_row = _entries(re_acc)
            if d == zero:
                re_row.append((FREE, 0, 0, 1.0))
            prob.add_constraint(re_row, fd.real)
            if not real_mode and any(d):
                prob.add_constraint(_entries(im_acc), fd.imag)

    prob.set_objective([(FREE, 0, 0, 1.0)])
    prob.info = {
        "mode": "real" if real_mode else "complex",
        "block_specs": specs,
        "groups": len(F_list),
        "blocks_per_group": bpk,
    }
    return prob


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@dataclass
class Certificate:
    """Numeric Gram certificate; trust only what verify_certificate says."""

    epsilon: float
    grams: list
    basis_specs: list
    residual: float = None
    min_eig: float = None
    valid: bool = None


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    residual: float
    min_eig: float
    epsilon: float
    worst_group: int
    worst_degree: tuple
    l1_error: float = 0.0


def extract_certificate(problem, solution):
    """Recover Hermitian Gram matrices from a solved embedded problem."""
    info = getattr(problem, "info", None)
    if info is None:
        raise ValueError("problem was not produced by an assemble_* call")
    grams = []
    for spec, E in zip(info["block_specs"], solution.blocks):
        if info["mode"] == "real":
            grams.append(np.array(E, dtype=np.float64))
        else:
            s = spec.Nhat
            A = E[:s, :s]
            C = E[s:, s:]
            B = E[:s, s:]
            grams.append((A + C) / 2.0 + 1j * (B.T - B) / 2.0)
    return Certificate(
        epsilon=float(solution.free_values[0]),
        grams=grams,
        basis_specs=list(info["block_specs"]),
    )


def _rational_qc(x):
    return QC(Fraction(float(x)))


def _gram_to_rational(G):
    """Exact complex-rational copy of a numeric Gram matrix.

    The numeric block is Hermitized first (in floats, where the symmetric
    embedding already made it Hermitian to machine precision) so the
    rational copy is exactly Hermitian.
    """
    G = np.asarray(G)
    if np.iscomplexobj(G):
        H = 0.5 * (G + G.conj().T)
        return [
            [QC(Fraction(float(H[r, c].real)), Fraction(float(H[r, c].imag)))
             for c in range(H.shape[1])]
            for r in range(H.shape[0])
        ]
    H = 0.5 * (G + G.T)
    return [
        [QC(Fraction(float(H[r, c]))) for c in range(H.shape[1])]
        for r in range(H.shape[0])
    ]


def _gram_polynomial(G_rat, spec, L):
    """Exact TrigPoly with coefficients tr[T(d) G] for all representable d."""
    coeffs = {}
    exps = [spec.exponent(j) for j in range(spec.Nhat)]
    for r in range(spec.Nhat):
        er = exps[r]
        for c in range(spec.Nhat):
            ec = exps[c]
            d = tuple(a - b for a, b in zip(er, ec))
            val = G_rat[c][r]
            if d in coeffs:
                coeffs[d] = coeffs[d] + val
            else:
                coeffs[d] = val
    coeffs = {d: v for d, v in coeffs.items() if not v.is_zero()}
    return TrigPoly(L, coeffs)


def verify_certificate(cert, F_list, D_list=(), rtol=1e-6, ptol=1e-8):
    """Exact-rational re-verification of a numeric certificate.

    Rationalizes each Gram block, rebuilds every polynomial coefficient
    through the trace parameterization (with exact convolution against the
    domain polynomials), and compares against F_k - eps.  The report's
    residual is the largest coefficient mismatch (absolute); validity
    requires residual <= rtol * max(1, largest |f_k|) and every Gram block
    to pass psd_check with tolerance ptol.

    l1_error is the largest (over groups) coefficient l1 norm of the
    mismatch polynomial.  Every point of the torus has |z^d| = 1, so
    wherever the domain polynomials are nonnegative the certificate pins
    F_k(z) >= epsilon - l1_error up to the Gram eigenvalue slack; a strictly
    positive epsilon - l1_error is therefore a sound positivity margin.
    """
    F_list = list(F_list)
    D_list = list(D_list)
    bpk = 1 + len(D_list)
    if len(cert.grams) != bpk * len(F_list):
        raise ValueError(
            f"certificate has {len(cert.grams)} blocks; expected "
            f"{bpk * len(F_list)} for {len(F_list)} polynomials and "
            f"{len(D_list)} domains")
    if len(cert.basis_specs) != len(cert.grams):
        raise ValueError("basis spec count does not match Gram block count")
    L = F_list[0].L
    eps = QC(Fraction(float(cert.epsilon)))

    residual = 0.0
    l1_error = 0.0
    worst_group = -1
    worst_degree = tuple(0 for _ in range(L))
    coeff_scale = 1.0
    for F in F_list:
        for _, v in F.terms():
            coeff_scale = max(coeff_scale, abs(complex(v)))

    for k, F in enumerate(F_list):
        spec0 = cert.basis_specs[k * bpk]
        G0 = _gram_to_rational(cert.grams[k * bpk])
        if len(G0) != spec0.Nhat:
            raise ValueError(f"Gram block {k * bpk} does not match its basis")
        rebuilt = _gram_polynomial(G0, spec0, L)
        for i, dom in enumerate(D_list):
            spec_i = cert.basis_specs[k * bpk + 1 + i]
            Gi = _gram_to_rational(cert.grams[k * bpk + 1 + i])
            if len(Gi) != spec_i.Nhat:
                raise ValueError(
                    f"Gram block {k * bpk + 1 + i} does not match its basis")
            rebuilt = rebuilt + dom.D * _gram_polynomial(Gi, spec_i, L)
        target = F - TrigPoly.const(L, eps)
        diff = target - rebuilt
        group_l1 = 0.0
        for d, v in diff.terms():
            err = abs(complex(v))
            group_l1 += err
            if err > residual:
                residual = err
                worst_group = k
                worst_degree = d
        l1_error = max(l1_error, group_l1)

    min_eig = math.inf
    for G in cert.grams:
        _, est = sdpsolver.psd_check(np.asarray(G), tol=ptol)
        min_eig = min(min_eig, est)

    valid = residual <= rtol * coeff_scale and min_eig >= -ptol
    cert.residual = residual
    cert.min_eig = min_eig
    cert.valid = valid
    return VerificationReport(
        valid=valid,
        residual=residual,
        min_eig=min_eig,
        epsilon=cert.epsilon,
        worst_group=worst_group,
        worst_degree=worst_degree,
        l1_error=l1_error,
    )


# ---------------------------------------------------------------------------
# certificate JSON
# ---------------------------------------------------------------------------


def certificate_to_json(cert):
    """Serialize: {epsilon, blocks: [{nhat, re, im}], residual, min_eig,
    valid} with matrices as row-major decimal strings."""
    blocks = []
    for spec, G in zip(cert.basis_specs, cert.grams):
        G = np.asarray(G, dtype=np.complex128)
        blocks.append({
            "nhat": list(spec.nhat),
            "re": [[repr(float(x)) for x in row] for row in G.real],
            "im": [[repr(float(x)) for x in row] for row in G.imag],
        })
    doc = {
        "epsilon": cert.epsilon,
        "blocks": blocks,
        "residual": cert.residual,
        "min_eig": cert.min_eig,
        "valid": cert.valid,
    }
    return json.dumps(doc, indent=2)


def certificate_from_json(text):
    doc = json.loads(text)
    grams = []
    specs = []
    for blk in doc["blocks"]:
        re = np.array([[float(x) for x in row] for row in blk["re"]])
        im = np.array([[float(x) for x in row] for row in blk["im"]])
        specs.append(GramBasisSpec.from_degrees(blk["nhat"]))
        if np.any(im != 0.0):
            grams.append(re + 1j * im)
        else:
            grams.append(re)
    return Certificate(
        epsilon=float(doc["epsilon"]),
        grams=grams,
        basis_specs=specs,
        residual=doc.get("residual"),
        min_eig=doc.get("min_eig"),
        valid=doc.get("valid"),
    )


# ---------------------------------------------------------------------------
# exhaustive evaluation on fully periodic domains
# ---------------------------------------------------------------------------


def finite_grid_positivity(F_list, periods):
    """Minimum of every F_k over the product of root-of-unity grids.

    Evaluation runs at 40-digit precision so the returned minimum is exact
    for all practical purposes; Hermitian symmetry makes the values real
    and the tiny imaginary residue is checked.  Returns
    (min value, argmin z tuple, argmin polynomial index).
    """
    F_list = list(F_list)
    if not F_list:
        raise ValueError("need at least one polynomial")
    L = F_list[0].L
    periods = [int(N) for N in periods]
    if len(periods) != L:
        raise ValueError(f"expected {L} periods")
    if any(N < 1 for N in periods):
        raise ValueError("periods must be >= 1")

    best = None
    best_point = None
    best_k = -1
    with mpmath.workdps(40):
        for idx in itertools.product(*(range(N) for N in periods)):
            for k, F in enumerate(F_list):
                val = mpmath.mpc(0)
                for d, q in F.terms():
                    # z_i^{d_i} at the idx_i-th N_i-th root of unity
                    phase = mpmath.mpf(0)
                    for j, di, N in zip(idx, d, periods):
                        phase += mpmath.mpf(2 * j * di) / N
                    coeff = mpmath.mpc(
                        mpmath.mpf(q.re.numerator) / q.re.denominator,
                        mpmath.mpf(q.im.numerator) / q.im.denominator)
                    val += coeff * mpmath.expjpi(phase)
                if abs(val.imag) > mpmath.mpf(10) ** (-20):
                    raise ArithmeticError(
                        "non-real value of a Hermitian polynomial")
                rv = val.real
                if best is None or rv < best:
                    best = rv
                    best_k = k
                    best_point = tuple(
                        complex(mpmath.expjpi(mpmath.mpf(2 * j) / N))
                        for j, N in zip(idx, periods))
        return float(best), best_point, best_k
