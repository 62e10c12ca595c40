"""Tests for the stability decision pipelines.

Reference values are hand-derived (Routh rows, determinant coefficients)
or cross-checked against independent numeric oracles (numpy eigenvalues,
frequency sampling); the pipelines under test never call an eigensolver.
"""

import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import infinite_2d_model, mixed_periodic_model, random_model
from siscert import certify, oracle, sdpsolver, sos
from siscert.certify import (
    INDETERMINATE, NOT_STABLE, STABLE, DegenerateTable, RouthTable, Verdict,
)
from siscert.matpoly import MatTrigPoly
from siscert.model import DirectionSpec, ModelError, SisModel
from siscert.trigpoly import QC, TrigPoly


#: iteration cap for the randomized consistency suites -- a certificate that
#: verifies is accepted regardless of the solver's stopping label, so capping
#: only shortens the crawl on near-degenerate random instances
FAST_OPTS = sdpsolver.SolveOptions(max_iter=20000)


def const_tp(L, value):
    return TrigPoly.const(L, QC(Fraction(value)))


def random_torus(rng, L):
    return tuple(np.exp(2j * np.pi * rng.random()) for _ in range(L))


def eigs_match(a, b, tol=1e-8):
    """Greedy multiset comparison of two eigenvalue collections."""
    b = list(b)
    for x in a:
        j = min(range(len(b)), key=lambda i: abs(b[i] - x))
        if abs(b[j] - x) > tol:
            return False
        b.pop(j)
    return not b


def diagonal_plant(diag, kind="infinite", period=None):
    """n0 = len(diag) plant, one forward channel, no feedback into the
    channel: h = z so |h|^2 = 1 and K equals diag(A_TT) exactly."""
    n0 = len(diag)
    return SisModel.create(
        n0=n0,
        directions=[DirectionSpec(kind, 1, 0, period=period)],
        A_TT=[[str(diag[i]) if i == j else "0" for j in range(n0)]
              for i in range(n0)],
        A_TS=[["0"]] * n0,
        A_ST=[["0"] * n0],
        A_SS=[["0"]],
    )


def coupled_scalar_plant(t, c, kind2="periodic", period2=3):
    """Scalar plant on a 2-D lattice, one forward channel per direction,
    coupling c through direction 1 only: A(z) = t + c * z1^{-1}."""
    return SisModel.create(
        n0=1,
        directions=[
            DirectionSpec("infinite", 1, 0),
            DirectionSpec(kind2, 1, 0, period=period2),
        ],
        A_TT=[[str(t)]],
        A_TS=[[str(c), "0"]],
        A_ST=[["1"], ["0"]],
        A_SS=[["0", "0"], ["0", "0"]],
    )


def z2_only_plant(t, c, period=1):
    """Mirror image of :func:`coupled_scalar_plant`: the coupling runs
    through the periodic direction only, A(z) = t + c * z2^{-1} with z2
    on the period-th roots of unity."""
    return SisModel.create(
        n0=1,
        directions=[
            DirectionSpec("infinite", 1, 0),
            DirectionSpec("periodic", 1, 0, period=period),
        ],
        A_TT=[[str(t)]],
        A_TS=[["0", str(c)]],
        A_ST=[["0"], ["1"]],
        A_SS=[["0", "0"], ["0", "0"]],
    )


# ---------------------------------------------------------------------------
# K = H * circle_conj(h)
# ---------------------------------------------------------------------------


class TestBuildK:
    def test_unit_denominator_gives_numerator(self, infinite2d):
        h, H = infinite2d.symbol_num_den()
        assert h == TrigPoly.one(2)
        assert certify.build_K(infinite2d) == H

    def test_constant_denominator_scales(self):
        # two opposite channels with cross feedback: h = 1 - a*b constant
        m = SisModel.create(
            n0=1,
            directions=[DirectionSpec("infinite", 1, 1)],
            A_TT=[["-1"]],
            A_TS=[["0.5", "0.25"]],
            A_ST=[["1"], ["1"]],
            A_SS=[["0", "0.5"], ["0.5", "0"]],
        )
        h, H = m.symbol_num_den()
        assert h == const_tp(1, Fraction(3, 4))
        assert certify.build_K(m) == H.scale(QC(Fraction(3, 4)))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_scaled_symbol_pointwise(self, seed):
        rng = random.Random(400 + seed)
        m = random_model(rng)
        h, _ = m.symbol_num_den()
        K = certify.build_K(m)
        for _ in range(5):
            z = random_torus(rng, m.L)
            hz = complex(h.eval(z))
            if abs(hz) < 1e-6:
                continue
            expect = abs(hz) ** 2 * m.eval_A(z)
            got = K.eval(z)
            assert np.allclose(got, expect, atol=1e-10 * max(1, abs(hz) ** 2))


# ---------------------------------------------------------------------------
# F = det(-W) for all-infinite lattices
# ---------------------------------------------------------------------------


class TestBuildFThm1:
    def test_reference_coefficients_exact(self, infinite2d):
        F = certify.build_F_thm1(infinite2d)
        expect = TrigPoly(2, {
            (0, 0): QC(Fraction(143, 32)),
            (1, 1): QC(Fraction(9, 16)),
            (-1, -1): QC(Fraction(9, 16)),
            (2, 2): QC(Fraction(1, 64)),
            (-2, -2): QC(Fraction(1, 64)),
        })
        assert F == expect

    def test_constant_diagonal_symbol(self):
        # eigenvalue-sum products: (1+1)(1+2)(2+1)(2+2) = 72
        m = diagonal_plant([-1, -2])
        F = certify.build_F_thm1(m)
        assert F == const_tp(1, 72)

    def test_kronecker_sum_spectrum(self):
        rng = np.random.default_rng(7)
        for n in (2, 3, 4):
            M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            W = np.kron(M, np.eye(n)) + np.kron(np.eye(n), M.conj())
            ev = np.linalg.eigvals(M)
            expect = [a + np.conj(b) for a in ev for b in ev]
            assert eigs_match(np.linalg.eigvals(W), expect, tol=1e-8)

    @pytest.mark.parametrize("seed", range(5))
    def test_determinant_identity_pointwise(self, seed):
        # eval(F, z) = |h(z)|^(2 n0^2) det(-(A x I + I x conj A))
        rng = random.Random(500 + seed)
        m = random_model(rng, n0=rng.choice((1, 2)))
        h, _ = m.symbol_num_den()
        F = certify.build_F_thm1(m)
        n0 = m.n0
        for _ in range(20):
            z = random_torus(rng, m.L)
            hz = complex(h.eval(z))
            if abs(hz) < 1e-6:
                continue
            A = m.eval_A(z)
            What = np.kron(A, np.eye(n0)) + np.kron(np.eye(n0), A.conj())
            expect = abs(hz) ** (2 * n0 * n0) * np.linalg.det(-What)
            got = complex(F.eval(z))
            assert abs(got - expect) <= 1e-8 * max(1.0, abs(expect))
            assert abs(got.imag) < 1e-9 * max(1.0, abs(got))

    @pytest.mark.parametrize("seed", range(4))
    def test_hermitian_exactly(self, seed):
        rng = random.Random(550 + seed)
        m = random_model(rng, n0=rng.choice((1, 2)))
        assert certify.build_F_thm1(m).hermitian

    def test_size_cap(self):
        m = diagonal_plant([-1, -2, -3, -4, -5])
        with pytest.raises(ValueError, match="exceeds limit"):
            certify.build_F_thm1(m)


# ---------------------------------------------------------------------------
# characteristic polynomial over the Laurent ring
# ---------------------------------------------------------------------------


class TestCharPoly:
    def test_scalar_case(self):
        p = TrigPoly(1, {(1,): QC(Fraction(1, 2)), (0,): QC(2),
                         (-1,): QC(Fraction(1, 2))})
        m0, m1 = certify.char_poly_K(MatTrigPoly([[p]]))
        assert m1 == TrigPoly.one(1)
        assert m0 == p * QC(-1)

    def test_constant_matrix_matches_numpy(self):
        rows = [[Fraction(1, 2), Fraction(-1, 4), Fraction(0)],
                [Fraction(1), Fraction(-2), Fraction(3, 8)],
                [Fraction(0), Fraction(5, 8), Fraction(-1)]]
        K = MatTrigPoly.constant(1, rows)
        coeffs = certify.char_poly_K(K)
        # numpy returns highest power first
        ref = np.poly(np.array([[float(x) for x in r] for r in rows]))
        for i, c in enumerate(coeffs):
            assert c.is_constant()
            assert complex(c.constant_value()) == pytest.approx(
                ref[len(rows) - i], abs=1e-10)

    @pytest.mark.parametrize("seed", range(4))
    def test_pointwise_matches_numpy(self, seed):
        rng = random.Random(600 + seed)
        m = random_model(rng, n0=2)
        K = certify.build_K(m)
        coeffs = certify.char_poly_K(K)
        assert coeffs[-1] == TrigPoly.one(m.L)
        for _ in range(5):
            z = random_torus(rng, m.L)
            ref = np.poly(K.eval(z))
            for i, c in enumerate(coeffs):
                got = complex(c.eval(z))
                assert got == pytest.approx(ref[m.n0 - i], abs=1e-8)

    def test_rejects_nonsquare(self):
        K = MatTrigPoly.constant(1, [[1, 2]])
        with pytest.raises(ValueError, match="square"):
            certify.char_poly_K(K)


# ---------------------------------------------------------------------------
# phi = m * m_conj
# ---------------------------------------------------------------------------


class TestBuildPhi:
    def test_real_constant_square(self):
        # ((lambda+2)(lambda+3))^2 = lambda^4 +10l^3 +37l^2 +60l +36
        m_list = [const_tp(1, 6), const_tp(1, 5), const_tp(1, 1)]
        phi = certify.build_phi(m_list)
        expect = [36, 60, 37, 10, 1]
        assert [complex(p.constant_value()) for p in phi] == \
            [complex(v) for v in expect]

    def test_leading_coefficient_is_one(self, mixed2d):
        K = certify.build_K(mixed2d)
        phi = certify.build_phi(certify.char_poly_K(K))
        assert phi[-1] == TrigPoly.one(2)
        assert all(p.hermitian for p in phi)

    @pytest.mark.parametrize("seed", range(3))
    def test_equals_squared_modulus_for_real_lambda(self, seed):
        rng = random.Random(700 + seed)
        m = random_model(rng, n0=2)
        coeffs = certify.char_poly_K(certify.build_K(m))
        phi = certify.build_phi(coeffs)
        for lam in (0.3, -1.7, 2.0):
            for _ in range(3):
                z = random_torus(rng, m.L)
                mz = sum(complex(c.eval(z)) * lam ** i
                         for i, c in enumerate(coeffs))
                pz = sum(complex(p.eval(z)) * lam ** i
                         for i, p in enumerate(phi))
                assert pz == pytest.approx(abs(mz) ** 2, rel=1e-8, abs=1e-10)


# ---------------------------------------------------------------------------
# cleared Routh table
# ---------------------------------------------------------------------------


class TestRouthTable:
    def test_quartic_all_real_roots(self):
        # (lambda+1)^4: cleared leading entries 1, 4, 20, 64, 256
        phi = [const_tp(1, v) for v in (1, 4, 6, 4, 1)]
        table = certify.routh_table(phi)
        assert [complex(e.constant_value()) for e in table.ebar] == \
            [1, 4, 20, 64, 256]
        assert table.nonpositive_set == []
        assert table.nonconstant_polys == []

    def test_imaginary_axis_roots_truncate(self):
        # (lambda^2-1)^2 = lambda^4 - 2 lambda^2 + 1: odd row vanishes
        phi = [const_tp(1, v) for v in (1, 0, -2, 0, 1)]
        table = certify.routh_table(phi)
        assert len(table.ebar) == 2
        assert table.ebar[0] == TrigPoly.one(1)
        assert table.ebar[1].is_zero()
        assert table.nonpositive_set == [1]

    def test_prefactor_identity(self, mixed2d):
        K = certify.build_K(mixed2d)
        table = certify.routh_table(
            certify.build_phi(certify.char_poly_K(K)))
        assert table.ehat[0] == TrigPoly.one(2)
        for i in range(1, len(table.ebar)):
            prod = TrigPoly.one(2)
            k = i - 1
            while k >= 0:
                prod = prod * table.ebar[k]
                k -= 2
            assert table.ehat[i] == prod

    def test_mixed_reference_rows_exact(self, mixed2d):
        K = certify.build_K(mixed2d)
        table = certify.routh_table(
            certify.build_phi(certify.char_poly_K(K)))
        u, ub = (1, 1), (-1, -1)
        assert table.ebar[0] == TrigPoly.one(2)
        assert table.ebar[1] == const_tp(2, 4)
        assert table.ebar[2] == TrigPoly(2, {
            (0, 0): QC(20),
            u: QC(Fraction(1, 4)), ub: QC(Fraction(1, 4)),
        })
        e3 = table.ebar[3]
        assert e3.coeff((0, 0)) == QC(Fraction(511, 8))
        assert e3.coeff((1, 1)) == QC(4)
        assert e3.coeff((2, 2)) == QC(Fraction(1, 16))
        e4 = table.ebar[4]
        assert e4.coeff((0, 0)) == QC(Fraction(33727, 128))
        assert e4.coeff((1, 1)) == QC(Fraction(1543, 32))
        assert e4.coeff((2, 2)) == QC(Fraction(577, 256))
        assert e4.coeff((3, 3)) == QC(Fraction(1, 32))
        assert table.nonpositive_set == []
        assert len(table.nonconstant_polys) == 3

    def test_malformed_inputs(self):
        with pytest.raises(DegenerateTable, match="odd number"):
            certify.routh_table([const_tp(1, 1)] * 4)
        with pytest.raises(DegenerateTable, match="exactly 1"):
            certify.routh_table([const_tp(1, v) for v in (1, 2, 2)])

    @pytest.mark.parametrize("n0", (2, 3))
    def test_constant_systems_match_lyapunov(self, n0):
        # all rows positive <=> the constant matrix is Hurwitz
        rng = random.Random(80 + n0)
        checked = 0
        while checked < 40:
            rows = [[Fraction(rng.randint(-8, 8), 8) for _ in range(n0)]
                    for _ in range(n0)]
            M = np.array([[float(x) for x in r] for r in rows])
            if abs(np.linalg.eigvals(M).real).min() < 1e-7:
                continue
            table = certify.routh_table(certify.build_phi(
                certify.char_poly_K(MatTrigPoly.constant(1, rows))))
            routh_stable = (not table.nonpositive_set
                            and not table.nonconstant_polys)
            assert routh_stable == oracle.hurwitz_lyapunov(M)
            checked += 1


# ---------------------------------------------------------------------------
# exponent folding on root-of-unity domains
# ---------------------------------------------------------------------------


def random_hermitian_tp(rng, L, box=4, nterms=6):
    """Random Hermitian trig poly: mirrored conjugate coefficient pairs."""
    coeffs = {}
    for _ in range(nterms):
        d = tuple(rng.randint(-box, box) for _ in range(L))
        c = QC(Fraction(rng.randint(-8, 8), 4),
               Fraction(rng.randint(-8, 8), 4))
        md = tuple(-x for x in d)
        coeffs[d] = coeffs.get(d, QC()) + c
        coeffs[md] = coeffs.get(md, QC()) + c.conjugate()
    return TrigPoly(L, coeffs)


class TestFoldPeriodic:
    def test_no_periodic_variables_is_identity(self):
        rng = random.Random(7)
        p = random_hermitian_tp(rng, 2)
        assert certify.fold_periodic(p, [None, None]) == p

    def test_centered_residues_odd_period(self):
        def mono(e):
            return TrigPoly.monomial(1, (e,))

        def fold(p):
            return certify.fold_periodic(p, [3])

        assert fold(mono(2)) == mono(-1)
        assert fold(mono(3)) == TrigPoly.one(1)
        assert fold(mono(-2)) == mono(1)
        assert fold(mono(4) + mono(-4)) == mono(1) + mono(-1)

    def test_even_period_boundary_split(self):
        # on the 4th roots z^2 = z^-2, so a Hermitian pair is unchanged
        # while its anti-symmetric sibling vanishes identically
        pair = TrigPoly.monomial(1, (2,)) + TrigPoly.monomial(1, (-2,))
        assert certify.fold_periodic(pair, [4]) == pair
        odd = (TrigPoly.monomial(1, (2,), QC(0, 1))
               + TrigPoly.monomial(1, (-2,), QC(0, -1)))
        assert odd.hermitian
        assert certify.fold_periodic(odd, [4]).is_zero()

    @pytest.mark.parametrize("periods", [(3,), (4,), (1,)])
    def test_matches_original_on_domain_1d(self, periods):
        rng = random.Random(sum(periods))
        p = random_hermitian_tp(rng, 1, box=7)
        q = certify.fold_periodic(p, periods)
        for k in range(periods[0]):
            z = (np.exp(2j * np.pi * k / periods[0]),)
            assert q.eval(z) == pytest.approx(p.eval(z), abs=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_original_on_domain_mixed(self, seed):
        # one free torus variable, one folded onto the 4th roots
        rng = random.Random(30 + seed)
        p = random_hermitian_tp(rng, 2, box=5, nterms=8)
        q = certify.fold_periodic(p, [None, 4])
        for k in range(4):
            z = (random_torus(rng, 1)[0], np.exp(2j * np.pi * k / 4))
            assert q.eval(z) == pytest.approx(p.eval(z), abs=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_preserves_hermitian_and_caps_degree(self, seed):
        rng = random.Random(60 + seed)
        p = random_hermitian_tp(rng, 2, box=9, nterms=10)
        q = certify.fold_periodic(p, [5, 4])
        assert q.hermitian
        assert q.degree[0] <= 2 and q.degree[1] <= 2

    def test_period_count_mismatch(self):
        with pytest.raises(ValueError, match="periods"):
            certify.fold_periodic(TrigPoly.one(2), [3])

    def test_target_classification(self):
        # second variable collapses to z2 = 1; first stays free
        work = z2_only_plant("-1", "0.5").infinite_first()[0]

        def sym_pair(axis, weight):
            d = (1, 0) if axis == 0 else (0, 1)
            md = tuple(-x for x in d)
            return (TrigPoly.monomial(2, d, weight)
                    + TrigPoly.monomial(2, md, weight))

        keeps = const_tp(2, 1) + sym_pair(0, Fraction(1, 2))
        drops = const_tp(2, 1) + sym_pair(1, Fraction(1, 2))
        refutes = const_tp(2, -1) + sym_pair(1, Fraction(1, 4))
        table = RouthTable(ebar=[TrigPoly.one(2), keeps, drops, refutes],
                           ehat=[], nonconstant_polys=[keeps, drops, refutes],
                           nonpositive_set=[])
        F_list, refuted, reduced = certify.fold_targets(work, table)
        assert F_list == [keeps]
        assert refuted == [QC(Fraction(-1, 2))]
        assert reduced == 1


# ---------------------------------------------------------------------------
# all-infinite decision path
# ---------------------------------------------------------------------------


class TestTheorem1Analyze:
    def test_reference_system_stable(self, infinite2d):
        v = certify.theorem1_analyze(infinite2d, (0, 0))
        assert v.status == STABLE
        assert v.epsilon_star == pytest.approx(3.3750, abs=5e-3)
        assert v.certificate is not None and v.certificate.valid
        assert v.reason["certified_lower_bound"] > 3.36

    def test_unstable_at_all_ones_point(self):
        v = certify.theorem1_analyze(diagonal_plant([1, -2]))
        assert v.status == NOT_STABLE
        assert "all-ones" in v.reason["stage"]
        assert v.reason["abscissa"] > 0.9

    def test_rejects_periodic_directions(self, mixed2d):
        with pytest.raises(ModelError, match="infinite"):
            certify.theorem1_analyze(mixed2d)

    def test_slack_validation(self, infinite2d):
        with pytest.raises(ValueError, match="slack entries"):
            certify.theorem1_analyze(infinite2d, (1,))
        with pytest.raises(ValueError, match=">= 0"):
            certify.theorem1_analyze(infinite2d, (-1, 0))

    @pytest.mark.parametrize("seed", range(8))
    def test_verdicts_consistent_with_sampling(self, seed):
        rng = random.Random(900 + seed)
        shift = Fraction(1, 2) if seed % 2 else None
        m = random_model(rng, n0=rng.choice((1, 2)),
                         kinds=("infinite",) * 2, L=2,
                         one_sided=True, zero_ass=True, diag_shift=shift)
        v = certify.theorem1_analyze(m, (1, 1), opts=FAST_OPTS)
        if v.status == STABLE:
            worst, _ = oracle.freq_sample_abscissa(m, (16, 16))
            assert worst < 1e-6
        elif v.status == NOT_STABLE:
            point = v.reason["witness_point"]
            assert oracle.spectral_abscissa(m.eval_A(point)) > 0


# ---------------------------------------------------------------------------
# periodic / mixed decision path
# ---------------------------------------------------------------------------


class TestTheorem2Analyze:
    def test_reference_system_stable(self, mixed2d):
        v = certify.theorem2_analyze(mixed2d, (0, 0))
        assert v.status == STABLE
        assert v.epsilon_star == pytest.approx(19.5, abs=1e-3)
        assert v.certificate is not None and v.certificate.valid
        assert v.reason["certified_lower_bound"] > 19.4
        assert v.reason["variable_order"] == [0, 1]
        assert v.reason["row_polys"] == 3

    def test_periodic_direction_listed_first(self, mixed2d):
        swapped = mixed2d.reorder_directions([1, 0])
        v = certify.theorem2_analyze(swapped, (0, 0))
        assert v.status == STABLE
        assert v.epsilon_star == pytest.approx(19.5, abs=1e-3)
        assert v.reason["variable_order"] == [1, 0]

    def test_rejects_all_infinite(self, infinite2d):
        with pytest.raises(ModelError, match="periodic"):
            certify.theorem2_analyze(infinite2d)

    def test_nonpositive_row_refutes_without_sdp(self, monkeypatch):
        # A(z) = 1 > 0 pointwise: the first cleared row is -2
        m = diagonal_plant([1], kind="periodic", period=3)

        def boom(*a, **k):  # the SDP must not be reached
            raise AssertionError("solver should not run")
        monkeypatch.setattr(certify.sdpsolver, "solve", boom)
        monkeypatch.setattr(certify.sos, "finite_grid_positivity", boom)
        v = certify.theorem2_analyze(m)
        assert v.status == NOT_STABLE
        assert v.reason["stage"] == "cleared Routh rows"
        assert set(v.reason["nonpositive_rows"]) == {1, 2}
        assert v.reason["nonpositive_rows"][1] == pytest.approx(-2.0)

    def test_all_rows_positive_constants(self):
        m = coupled_scalar_plant(t="-1", c="0")
        v = certify.theorem2_analyze(m)
        assert v.status == STABLE
        assert v.certificate is None
        assert v.reason["rows"] == [1.0, 2.0, 2.0]

    def test_folded_rows_positive_without_sdp(self, monkeypatch):
        # A(z) = -1 + 0.5/z2 with z2 pinned to the 1st roots: the two
        # z-dependent rows fold to the positive constants 1 and 1/4
        m = z2_only_plant(t="-1", c="0.5")

        def boom(*a, **k):  # neither the SDP nor the grid scan may run
            raise AssertionError("solver should not run")
        monkeypatch.setattr(certify.sdpsolver, "solve", boom)
        monkeypatch.setattr(certify.sos, "finite_grid_positivity", boom)
        v = certify.theorem2_analyze(m)
        assert v.status == STABLE
        assert v.certificate is None
        assert v.reason["stage"] == "cleared Routh rows on the periodic domain"
        assert "positive constant on the domain" in v.reason["detail"]
        assert v.reason["reduced_rows"] == 2

    def test_folded_rows_nonpositive_refute_without_sdp(self, monkeypatch):
        # A(z) = 1 + 0.5/z2 with z2 pinned to the 1st roots: the rows
        # fold to -2(t + c) = -3 and -2(t + c)^3 = -27/4
        m = z2_only_plant(t="1", c="0.5")

        def boom(*a, **k):
            raise AssertionError("solver should not run")
        monkeypatch.setattr(certify.sdpsolver, "solve", boom)
        monkeypatch.setattr(certify.sos, "finite_grid_positivity", boom)
        v = certify.theorem2_analyze(m)
        assert v.status == NOT_STABLE
        assert v.reason["stage"] == "cleared Routh rows on the periodic domain"
        assert v.reason["nonpositive_folded_values"] == [
            pytest.approx(-3.0), pytest.approx(-6.75)]
        z = v.reason["witness_point"]
        assert oracle.spectral_abscissa(m.eval_A(z)) > 1.0

    def test_fully_periodic_stable_exact(self):
        # A(z) = -1 + 0.5/z on the 4th roots: worst row value 0.25 at z=1
        m = SisModel.create(
            n0=1,
            directions=[DirectionSpec("periodic", 1, 0, period=4)],
            A_TT=[["-1"]], A_TS=[["0.5"]], A_ST=[["1"]], A_SS=[["0"]],
        )
        v = certify.theorem2_analyze(m)
        assert v.status == STABLE
        assert v.certificate is None
        assert v.epsilon_star == pytest.approx(0.25, abs=1e-12)
        assert v.reason["minimizing_point"] == (pytest.approx(1.0),)

    def test_fully_periodic_unstable_witness(self):
        m = SisModel.create(
            n0=1,
            directions=[DirectionSpec("periodic", 1, 0, period=4)],
            A_TT=[["-0.1"]], A_TS=[["0.5"]], A_ST=[["1"]], A_SS=[["0"]],
        )
        v = certify.theorem2_analyze(m)
        assert v.status == NOT_STABLE
        # worst row at z = 1: 0.2 - 0.5 (z + 1/z) evaluates to -0.8
        assert v.reason["value"] == pytest.approx(-0.8, abs=1e-12)
        z = v.reason["witness_point"]
        assert oracle.spectral_abscissa(m.eval_A(z)) > 0.1

    def test_mixed_unstable_found_by_sampling(self):
        # A(z) = -0.1 + 0.5/z1: positive real part near z1 = 1
        m = coupled_scalar_plant(t="-0.1", c="0.5")
        v = certify.theorem2_analyze(m, opts=FAST_OPTS)
        assert v.status == NOT_STABLE
        assert v.reason["stage"] == "frequency sampling"
        z = v.reason["witness_point"]
        assert oracle.spectral_abscissa(m.eval_A(z)) > 0.1
        # witness respects the period-3 domain in the original order
        assert z[1] ** 3 == pytest.approx(1.0)

    def test_solver_failure_yields_indeterminate(self, monkeypatch, mixed2d):
        def fail(prob, opts=None):
            return sdpsolver.SdpSolution(
                status="Infeasible", objective=float("nan"), blocks=[],
                free_values=np.zeros(1), iterations=7,
                primal_residual=np.inf, dual_residual=np.inf, gap=np.inf)
        monkeypatch.setattr(certify.sdpsolver, "solve", fail)
        v = certify.theorem2_analyze(mixed2d)
        assert v.status == INDETERMINATE
        assert v.reason["solver_status"] == "Infeasible"
        assert "raising the degree slack" in v.reason["detail"]

    @pytest.mark.parametrize("seed", range(10))
    def test_fully_periodic_matches_eigenvalue_scan(self, seed):
        rng = random.Random(1000 + seed)
        L = rng.choice((1, 2))
        m = random_model(rng, n0=rng.choice((1, 2)), L=L,
                         kinds=("periodic",) * L,
                         one_sided=True, zero_ass=True)
        grids = [np.exp(2j * np.pi * np.arange(d.period) / d.period)
                 for d in m.directions]
        worst = max(
            np.linalg.eigvals(m.eval_A(z)).real.max()
            for z in __import__("itertools").product(*grids))
        if abs(worst) < 1e-9:
            pytest.skip("marginal random instance")
        v = certify.theorem2_analyze(m)
        assert v.status == (STABLE if worst < 0 else NOT_STABLE)

    @pytest.mark.parametrize("seed", range(6))
    def test_mixed_verdicts_consistent_with_sampling(self, seed):
        rng = random.Random(1100 + seed)
        shift = Fraction(1, 2) if seed % 2 else None
        m = random_model(rng, n0=1, L=2, kinds=("infinite", "periodic"),
                         one_sided=True, zero_ass=True, diag_shift=shift)
        v = certify.theorem2_analyze(m, (1, 1), opts=FAST_OPTS)
        if v.status == STABLE:
            worst, _ = oracle.freq_sample_abscissa(m, (24, 24))
            assert worst < 1e-6
        elif v.status == NOT_STABLE:
            point = v.reason.get("witness_point")
            if point is not None:
                assert oracle.spectral_abscissa(m.eval_A(point)) > 0


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------


class TestAnalyze:
    def test_routes_all_infinite(self, infinite2d):
        v = certify.analyze(infinite2d)
        assert v.status == STABLE
        assert "det(-W)" in v.reason["stage"]

    def test_routes_mixed(self, mixed2d):
        v = certify.analyze(mixed2d)
        assert v.status == STABLE
        assert "Routh" in v.reason["stage"]

    def test_default_slack_is_zero(self, infinite2d):
        v = certify.analyze(infinite2d)
        w = certify.analyze(infinite2d, (0, 0))
        assert v.epsilon_star == pytest.approx(w.epsilon_star, abs=1e-9)
