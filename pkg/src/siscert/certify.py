"""Decision pipelines for exponential stability of interconnected systems.

Two analysis paths cover the supported lattice layouts:

* every direction infinite (``theorem1_analyze``): a constant-matrix
  Hurwitz check of the symbol at the all-ones point, followed by global
  positivity of ``F(z) = det(-W(z))`` where ``W`` is the Kronecker-sum
  symbol built from ``K = H * circle_conj(h)``;
* at least one periodic direction (``theorem2_analyze``): the cleared
  Routh table of ``phi(lambda, z) = m(lambda, z) * m_conj(lambda, z)``
  (``m`` the characteristic polynomial of ``K``), whose rows are
  classified into refuting non-positive constants and positivity targets
  checked on the root-of-unity domain.

Both paths return a three-valued :class:`Verdict`: ``Stable`` only with
an exactly re-verified certificate (or exact finite-grid evaluation),
``NotStable`` only with a concrete witness, and ``Indeterminate`` when
the convex relaxation at the requested degree slack is inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from fractions import Fraction

from . import oracle, sdpsolver, sos
from .matpoly import MatTrigPoly, exact_div
from .model import INFINITE, ModelError, SisModel
from .trigpoly import QC, TrigPoly

__all__ = [
    "STABLE", "NOT_STABLE", "INDETERMINATE",
    "DegenerateTable", "RouthTable", "Verdict",
    "build_K", "build_F_thm1", "char_poly_K", "build_phi", "routh_table",
    "fold_periodic", "fold_targets",
    "theorem1_analyze", "theorem2_analyze", "analyze",
]

STABLE = "Stable"
NOT_STABLE = "NotStable"
INDETERMINATE = "Indeterminate"

#: sampled spectral abscissa must clear this margin to count as a witness
WITNESS_TOL = 1e-6

#: default per-variable sample count for the refutation scan
WITNESS_GRID = 24


class DegenerateTable(ValueError):
    """The table input is malformed (wrong length or non-unit leading
    coefficient); well-formed inputs never raise this."""


@dataclass
class RouthTable:
    """Cleared Routh table of an even self-reciprocal lambda-polynomial.

    ``ebar[i]`` is the cleared leading entry of row ``i`` and ``ehat[i]``
    the clearing prefactor (the product of the cleared leading entries of
    rows ``i-1, i-3, ...``).  ``nonpositive_set`` lists the rows whose
    cleared entry is a non-positive constant (each refutes stability on
    its own); ``nonconstant_polys`` are the remaining genuinely
    ``z``-dependent rows, whose strict positivity on the domain is the
    outstanding stability condition.
    """

    ebar: List[TrigPoly]
    ehat: List[TrigPoly]
    nonconstant_polys: List[TrigPoly]
    nonpositive_set: List[int]


@dataclass
class Verdict:
    """Outcome of a stability analysis.

    ``Stable`` carries a certificate that was re-verified in exact
    arithmetic (or, for fully periodic lattices, comes from exact
    evaluation over the finite frequency grid).  ``NotStable`` carries a
    concrete witness in ``reason``.  ``Indeterminate`` means the
    relaxation did not resolve the question at the requested degree
    slack; raising the slack may help.
    """

    status: str
    reason: dict = field(default_factory=dict)
    epsilon_star: Optional[float] = None
    certificate: Optional[sos.Certificate] = None


# ---------------------------------------------------------------------------
# symbol-level constructions
# ---------------------------------------------------------------------------


def build_K(m: SisModel) -> MatTrigPoly:
    """Polynomial stability symbol ``K = H * circle_conj(h)``.

    ``A = H / h`` is the rational transfer symbol; multiplying by the
    positive scalar ``|h|^2 = h * circle_conj(h)`` clears the denominator
    without moving any eigenvalue across the imaginary axis, so ``K(z)``
    is Hurwitz exactly where ``A(z)`` is.
    """
    h, H = m.symbol_num_den()
    return H.scale(h.circle_conj())


def build_F_thm1(m: SisModel, size_limit: int = 16) -> TrigPoly:
    """Determinant positivity target for all-infinite lattices.

    Builds the Kronecker-sum symbol ``W = K (x) I + I (x) circle_conj(K)``
    (eigenvalues ``lambda_i + conj(lambda_j)`` pointwise on the torus) and
    returns ``det(-W)``, which is strictly positive on the whole torus
    exactly when ``K(z)`` is Hurwitz everywhere.  The result is Hermitian:
    real-valued on the torus.
    """
    K = build_K(m)
    n0 = K.rows
    if n0 * n0 > size_limit:
        raise ValueError(
            f"Kronecker-sum determinant of size {n0 * n0} exceeds limit "
            f"{size_limit}; refusing")
    eye = MatTrigPoly.identity(m.L, n0)
    W = K.kron(eye) + eye.kron(K.circle_conj())
    F = (-W).det(size_limit=size_limit)
    if not F.hermitian:
        raise ArithmeticError("determinant lost Hermitian symmetry")
    return F


def char_poly_K(K: MatTrigPoly, size_limit: int = 16) -> List[TrigPoly]:
    """Characteristic polynomial of ``K`` over the Laurent-coefficient ring.

    Returns ``[m_0, ..., m_{n0}]`` with ``det(lambda I - K) =
    sum_i m_i(z) lambda^i`` and ``m_{n0} = 1``.  The eliminant variable is
    carried as one extra formal torus variable (it only ever appears with
    non-negative exponents), so the existing exact determinant applies
    unchanged.
    """
    if K.rows != K.cols:
        raise ValueError("matrix is not square")
    n0 = K.rows
    L = K.L

    def lift(p: TrigPoly) -> TrigPoly:
        return TrigPoly(L + 1, {d + (0,): c for d, c in p.terms()})

    lam = TrigPoly.monomial(L + 1, (0,) * L + (1,))
    zero = TrigPoly.zero(L + 1)
    lifted = MatTrigPoly([
        [(lam if i == j else zero) - lift(K[i, j]) for j in range(n0)]
        for i in range(n0)
    ])
    det = lifted.det(size_limit=size_limit)

    buckets: List[dict] = [dict() for _ in range(n0 + 1)]
    for d, c in det.terms():
        power = d[-1]
        if power < 0 or power > n0:
            raise ArithmeticError(
                f"characteristic polynomial has impossible degree {power}")
        buckets[power][d[:-1]] = c
    coeffs = [TrigPoly(L, b) for b in buckets]
    if coeffs[n0] != TrigPoly.one(L):
        raise ArithmeticError("characteristic polynomial is not monic")
    return coeffs


def build_phi(m_list: Sequence[TrigPoly]) -> List[TrigPoly]:
    """Self-paired lambda-polynomial ``phi = m * m_conj``.

    ``m_conj`` carries the circle-conjugated coefficients, so on the torus
    ``phi(lambda, z) = m(lambda, z) * conj(m(conj(lambda), z))``; for real
    ``lambda`` this is ``|m(lambda, z)|^2``.  Every returned coefficient is
    Hermitian (real-valued on the torus) and the leading one equals 1.
    """
    m_list = list(m_list)
    if not m_list:
        raise ValueError("need at least one coefficient")
    L = m_list[0].L
    conj = [mi.circle_conj() for mi in m_list]
    n0 = len(m_list) - 1
    phi = [TrigPoly.zero(L) for _ in range(2 * n0 + 1)]
    for a, ma in enumerate(m_list):
        for b, mb in enumerate(conj):
            phi[a + b] = phi[a + b] + ma * mb
    for j, p in enumerate(phi):
        if not p.hermitian:
            raise ArithmeticError(f"coefficient {j} lost Hermitian symmetry")
    return phi


# ---------------------------------------------------------------------------
# cleared Routh table
# ---------------------------------------------------------------------------


def _row_length(total_rows: int, i: int) -> int:
    # classical table of a degree-(total_rows-1) polynomial: row i keeps
    # ceil((total_rows - i) / 2) entries
    return (total_rows - i + 1) // 2


def routh_table(phi: Sequence[TrigPoly]) -> RouthTable:
    """Fraction-free Routh table with exact denominator clearing.

    The classical recursion ``e_{i,j} = (e_{i-1,0} e_{i-2,j+1} -
    e_{i-2,0} e_{i-1,j+1}) / e_{i-1,0}`` produces rational functions whose
    denominators are known products of earlier leading entries.  Running
    the recursion without the division keeps every entry polynomial, and
    multiplying row ``i`` by the clearing prefactor ``ehat[i] =
    prod(ebar[i-1], ebar[i-3], ...)`` recovers the cleared leading entries
    directly: with a unit row-0 entry the prefactor coincides with the
    tracked denominator, which the implementation checks, falling back to
    exact polynomial division otherwise.

    A row whose cleared leading entry is identically zero stops the
    recursion (the remaining rows are classically undefined); the zero
    entry is recorded and lands in ``nonpositive_set``, which refutes
    stability downstream, so the truncation never hides an unstable row.
    """
    phi = list(phi)
    if len(phi) < 3 or len(phi) % 2 == 0:
        raise DegenerateTable(
            f"need an odd number (>= 3) of coefficients, got {len(phi)}")
    L = phi[0].L
    one = TrigPoly.one(L)
    n0 = (len(phi) - 1) // 2
    if phi[2 * n0] != one:
        raise DegenerateTable("leading coefficient must be exactly 1")

    total_rows = 2 * n0 + 1

    def entry(row: List[TrigPoly], j: int) -> TrigPoly:
        return row[j] if j < len(row) else TrigPoly.zero(L)

    rows: List[List[TrigPoly]] = [
        [phi[2 * n0 - 2 * j] for j in range(n0 + 1)],
        [phi[2 * n0 - 2 * j - 1] for j in range(n0)],
    ]
    denoms: List[TrigPoly] = [one, one]
    ebar: List[TrigPoly] = [rows[0][0]]
    ehat: List[TrigPoly] = [one]

    for i in range(1, total_rows):
        if i >= 2:
            prev, prev2 = rows[i - 1], rows[i - 2]
            width = _row_length(total_rows, i)
            rows.append([
                entry(prev, 0) * entry(prev2, j + 1)
                - entry(prev2, 0) * entry(prev, j + 1)
                for j in range(width)
            ])
            denoms.append(denoms[i - 2] * entry(prev, 0))
        ehat.append(ehat[i - 2] * ebar[i - 1] if i >= 2 else ebar[0])
        lead = rows[i][0] if rows[i] else TrigPoly.zero(L)
        if ehat[i] == denoms[i]:
            cleared = lead
        else:  # pragma: no cover - the prefactor identity always holds
            cleared = exact_div(lead * ehat[i], denoms[i])
        ebar.append(cleared)
        if cleared.is_zero() and i < total_rows - 1:
            break

    nonpositive = [i for i, e in enumerate(ebar)
                   if e.is_nonpositive_constant()]
    nonconstant = [e for e in ebar if not e.is_constant()]
    return RouthTable(
        ebar=ebar,
        ehat=ehat,
        nonconstant_polys=nonconstant,
        nonpositive_set=nonpositive,
    )


# ---------------------------------------------------------------------------
# canonical exponents on root-of-unity domains
# ---------------------------------------------------------------------------


_HALF = QC(Fraction(1, 2))


def fold_periodic(p: TrigPoly, periods: Sequence[Optional[int]]) -> TrigPoly:
    """Fold exponents of periodic variables onto centered residues.

    Where variable ``i`` ranges over the ``N``-th roots of unity,
    ``z_i^d = z_i^(d mod N)``, so every exponent can be reduced to the
    centered residue in ``(-N/2, N/2]`` without changing values on the
    domain.  For even ``N`` the boundary residue ``N/2`` (where
    ``z^(N/2) = z^(-N/2) = +-1``) is split evenly between ``+N/2`` and
    ``-N/2`` to keep the coefficient map Hermitian, so the folded
    polynomial is still real on the whole torus.  Entries with ``None``
    periods (infinite directions) are left untouched.

    Folding caps the Gram basis degree of a positivity target at the
    period instead of the row's raw degree, which otherwise grows rapidly
    down the Routh table.
    """
    if len(periods) != p.L:
        raise ValueError(f"expected {p.L} periods, got {len(periods)}")
    if all(n is None for n in periods):
        return p
    acc: dict = {}
    for d, c in p.terms():
        targets = [((), c)]
        for di, n in zip(d, periods):
            if n is None:
                targets = [(t + (di,), w) for t, w in targets]
                continue
            r = di % n
            if r > n // 2:
                r -= n
            if 2 * r == n:  # boundary residue of an even period
                targets = [tw for t, w in targets
                           for tw in ((t + (r,), w * _HALF),
                                      (t + (-r,), w * _HALF))]
            else:
                targets = [(t + (r,), w) for t, w in targets]
        for t, w in targets:
            acc[t] = acc.get(t, QC()) + w
    return TrigPoly(p.L, acc)


def fold_targets(work: SisModel, table: RouthTable):
    """Classify the folded non-constant rows of a Routh table.

    Returns ``(F_list, refuted, reduced)``: the rows that stay genuinely
    z-dependent after folding (the positivity targets), the exact values
    of rows that fold to a non-positive constant (each refutes strict
    positivity at every domain point), and the count of rows that fold to
    a positive constant (satisfied identically on the domain).
    """
    periods = [d.period if d.kind != INFINITE else None
               for d in work.directions]
    F_list: List[TrigPoly] = []
    refuted: List[QC] = []
    reduced = 0
    for row in table.nonconstant_polys:
        q = fold_periodic(row, periods)
        if q.is_nonpositive_constant():
            refuted.append(q.constant_value())
        elif q.is_constant():
            reduced += 1
        else:
            F_list.append(q)
    return F_list, refuted, reduced


# ---------------------------------------------------------------------------
# analysis pipelines
# ---------------------------------------------------------------------------


def _as_slack(slack, L: int) -> Tuple[int, ...]:
    if slack is None:
        return tuple(0 for _ in range(L))
    slack = tuple(int(e) for e in slack)
    if len(slack) != L:
        raise ValueError(f"expected {L} slack entries, got {len(slack)}")
    if any(e < 0 for e in slack):
        raise ValueError("slack entries must be >= 0")
    return slack


def _certified_verdict(prob, sol, F_list, D_list, stage: str):
    """Extract + exactly re-verify a certificate; Stable only when the
    reconstruction pins the minimum above zero (eps - l1 error > 0)."""
    if sol.status not in ("Optimal", "MaxIter"):
        return None, None
    cert = sos.extract_certificate(prob, sol)
    rep = sos.verify_certificate(cert, F_list, D_list)
    margin = cert.epsilon - rep.l1_error
    if rep.valid and margin > 0:
        verdict = Verdict(
            STABLE,
            reason={
                "stage": stage,
                "solver_status": sol.status,
                "iterations": sol.iterations,
                "epsilon": cert.epsilon,
                "l1_error": rep.l1_error,
                "certified_lower_bound": margin,
            },
            epsilon_star=cert.epsilon,
            certificate=cert,
        )
        return verdict, rep
    return None, rep


def _witness_scan(m: SisModel, grid_per_dim: int = WITNESS_GRID):
    """Best-effort refutation: sample the spectral abscissa of A(z)."""
    grid = tuple(grid_per_dim for _ in range(m.L))
    try:
        return oracle.freq_sample_abscissa(m, grid)
    except (ModelError, ValueError):
        return None


def _unresolved_verdict(m: SisModel, sol, slack, stage: str,
                        report=None) -> Verdict:
    scan = _witness_scan(m)
    if scan is not None:
        value, point = scan
        if value > WITNESS_TOL:
            return Verdict(
                NOT_STABLE,
                reason={
                    "stage": "frequency sampling",
                    "witness_point": point,
                    "abscissa": value,
                },
            )
    reason = {
        "stage": stage,
        "solver_status": sol.status,
        "iterations": sol.iterations,
        "slack": tuple(slack),
        "detail": "no certificate at this slack and no sampled witness; "
                  "consider raising the degree slack",
    }
    if sol.status in ("Optimal", "MaxIter"):
        reason["epsilon"] = sol.objective
    if report is not None:
        reason["verification"] = {
            "valid": report.valid,
            "residual": report.residual,
            "min_eig": report.min_eig,
            "l1_error": report.l1_error,
        }
    if scan is not None:
        reason["best_sampled_abscissa"] = scan[0]
    return Verdict(INDETERMINATE, reason=reason)


def theorem1_analyze(m: SisModel, slack=None,
                     opts: Optional[sdpsolver.SolveOptions] = None) -> Verdict:
    """Decision path for lattices where every direction is infinite.

    Stability holds exactly when (i) the symbol at the all-ones point is
    Hurwitz and (ii) ``F = det(-W)`` is strictly positive on the torus.
    (i) is decided by an eigensolver-free Lyapunov check; (ii) by the
    global positivity program, whose certificate is re-verified in exact
    arithmetic before ``Stable`` is returned.
    """
    m.require_supported()
    if any(d.kind != INFINITE for d in m.directions):
        raise ModelError(
            "this decision path requires every direction to be infinite")
    slack = _as_slack(slack, m.L)

    A1 = m.A_at_one()
    if not oracle.hurwitz_lyapunov(A1):
        return Verdict(
            NOT_STABLE,
            reason={
                "stage": "constant symbol at the all-ones point",
                "witness_point": tuple(1.0 for _ in range(m.L)),
                "abscissa": oracle.spectral_abscissa(A1),
            },
        )

    F = build_F_thm1(m)
    prob = sos.assemble_global_sdp(F, slack)
    sol = sdpsolver.solve(prob, opts)
    verdict, rep = _certified_verdict(
        prob, sol, [F], [], "global positivity of det(-W)")
    if verdict is not None:
        return verdict
    return _unresolved_verdict(
        m, sol, slack, "global positivity of det(-W)", rep)


def theorem2_analyze(m: SisModel, slack=None,
                     opts: Optional[sdpsolver.SolveOptions] = None) -> Verdict:
    """Decision path for lattices with at least one periodic direction.

    Builds the cleared Routh table of ``phi(lambda, z)``.  Any
    non-positive constant row refutes stability outright.  Otherwise the
    z-dependent rows must be strictly positive at the root-of-unity
    frequencies: exact evaluation decides this when every direction is
    periodic, and the domain-restricted positivity program (with exact
    certificate re-verification) decides it for mixed lattices.
    """
    m.require_supported()
    if all(d.kind == INFINITE for d in m.directions):
        raise ModelError(
            "this decision path requires at least one periodic direction")
    slack = _as_slack(slack, m.L)

    work, order = m.infinite_first()
    slack_w = tuple(slack[orig] for orig in order)
    num_infinite = sum(1 for d in work.directions if d.kind == INFINITE)

    K = build_K(work)
    m_list = char_poly_K(K)
    phi = build_phi(m_list)
    table = routh_table(phi)

    base_reason = {"variable_order": list(order)}
    if table.nonpositive_set:
        rows = {
            i: _const_repr(table.ebar[i]) for i in table.nonpositive_set
        }
        return Verdict(
            NOT_STABLE,
            reason={
                **base_reason,
                "stage": "cleared Routh rows",
                "nonpositive_rows": rows,
            },
        )

    F_list = table.nonconstant_polys
    if not F_list:
        return Verdict(
            STABLE,
            reason={
                **base_reason,
                "stage": "cleared Routh rows",
                "detail": "every row is a positive constant",
                "rows": [_const_repr(e) for e in table.ebar],
            },
        )

    if num_infinite == 0:
        periods = [d.period for d in work.directions]
        value, point, k = sos.finite_grid_positivity(F_list, periods)
        point_orig = _unpermute_point(point, order)
        if value > 0:
            return Verdict(
                STABLE,
                reason={
                    **base_reason,
                    "stage": "exact evaluation on the finite frequency grid",
                    "grid_minimum": value,
                    "minimizing_point": point_orig,
                    "minimizing_row_poly": k,
                },
                epsilon_star=value,
            )
        return Verdict(
            NOT_STABLE,
            reason={
                **base_reason,
                "stage": "exact evaluation on the finite frequency grid",
                "witness_point": point_orig,
                "row_poly": k,
                "value": value,
            },
        )

    F_list, refuted, reduced = fold_targets(work, table)
    if refuted:
        return Verdict(
            NOT_STABLE,
            reason={
                **base_reason,
                "stage": "cleared Routh rows on the periodic domain",
                "witness_point": tuple(1.0 for _ in range(m.L)),
                "nonpositive_folded_values": [
                    float(v.re) if not v.im else complex(v) for v in refuted
                ],
            },
        )
    if not F_list:
        return Verdict(
            STABLE,
            reason={
                **base_reason,
                "stage": "cleared Routh rows on the periodic domain",
                "detail": "every z-dependent row folds to a positive "
                          "constant on the domain",
                "reduced_rows": reduced,
            },
        )

    D_list = sos.build_domain_polys(work.directions, num_infinite)
    prob = sos.assemble_domain_sdp(F_list, D_list, slack_w)
    sol = sdpsolver.solve(prob, opts)
    verdict, rep = _certified_verdict(
        prob, sol, F_list, D_list, "domain positivity of the Routh rows")
    if verdict is not None:
        verdict.reason.update(base_reason)
        verdict.reason["row_polys"] = len(F_list)
        return verdict
    out = _unresolved_verdict(
        m, sol, slack, "domain positivity of the Routh rows", rep)
    out.reason.update(base_reason)
    return out


def analyze(m: SisModel, slack=None,
            opts: Optional[sdpsolver.SolveOptions] = None) -> Verdict:
    """Dispatch to the analysis path matching the lattice layout."""
    m.require_supported()
    if all(d.kind == INFINITE for d in m.directions):
        return theorem1_analyze(m, slack, opts)
    return theorem2_analyze(m, slack, opts)


def _const_repr(p: TrigPoly):
    if not p.is_constant():
        return "non-constant"
    v = p.constant_value()
    return float(v.re) if not v.im else complex(v)


def _unpermute_point(point, order):
    out = [None] * len(order)
    for newpos, orig in enumerate(order):
        out[orig] = point[newpos]
    return tuple(out)
