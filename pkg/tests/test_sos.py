"""Tests for the positivity-certificate layer: trace parameterization,
domain polynomials, SDP assembly, exact re-verification, and grid scans."""

import json
from fractions import Fraction

import numpy as np
import pytest

from siscert import sdpsolver, sos
from siscert.grids import circle_grid, eval_on_grid
from siscert.model import INFINITE, PERIODIC, DirectionSpec
from siscert.sos import Certificate, GramBasisSpec, toeplitz_T
from siscert.trigpoly import QC, TrigPoly


def herm(rng, n):
    """Random complex Hermitian matrix."""
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (M + M.conj().T)


def lowrank_psd_poly():
    """Determinant-derived positivity target with known minimum 3.375.

    Support {0, +/-(1,1), +/-(2,2)}; minimum attained at z1 = z2 = -1:
    143/32 - 2 * 9/16 + 2 * 1/64 = 27/8 = 3.375.
    """
    c0 = QC(Fraction(143, 32))
    c1 = QC(Fraction(9, 16))
    c2 = QC(Fraction(1, 64))
    return TrigPoly(2, {
        (0, 0): c0,
        (1, 1): c1, (-1, -1): c1,
        (2, 2): c2, (-2, -2): c2,
    })


def cosine_poly():
    """z + 1/z = 2 cos(theta); minimum -2 on the circle."""
    return TrigPoly(1, {(1,): QC(1), (-1,): QC(1)})


# ---------------------------------------------------------------------------
# elementary Toeplitz patterns / trace parameterization
# ---------------------------------------------------------------------------


class TestToeplitz:
    def test_zero_degree_is_identity(self):
        T = toeplitz_T((0, 0), (2, 1))
        assert np.array_equal(T, np.eye(6))

    def test_single_variable_orientation(self):
        # basis (1, z): coefficient of z^1 in p^T(1/z) G p(z) is G[0, 1],
        # so T(1) must carry its one at row 1, column 0.
        T = toeplitz_T((1,), (1,))
        assert np.array_equal(T, [[0.0, 0.0], [1.0, 0.0]])
        rng = np.random.default_rng(3)
        G = herm(rng, 2)
        assert np.trace(T @ G) == pytest.approx(G[0, 1], abs=1e-15)

    def test_negative_degree_is_transpose(self):
        assert np.array_equal(
            toeplitz_T((-2, 1), (3, 2)), toeplitz_T((2, -1), (3, 2)).T)

    def test_out_of_range_degree_rejected(self):
        with pytest.raises(ValueError):
            toeplitz_T((4,), (3,))
        with pytest.raises(ValueError):
            toeplitz_T((0, -2), (3, 1))

    @pytest.mark.parametrize("nhat", [(2,), (2, 3), (3, 3)])
    def test_trace_reconstruction(self, nhat):
        # sum_d tr[T(d) G] z^d must reproduce p^T(1/z) G p(z) pointwise.
        rng = np.random.default_rng(11)
        spec = GramBasisSpec.from_degrees(nhat)
        G = herm(rng, spec.Nhat)
        L = len(nhat)

        degrees = list(sos._half_box(nhat))
        degrees += [tuple(-x for x in d) for d in degrees if any(d)]
        coeffs = {d: np.trace(toeplitz_T(d, nhat) @ G) for d in degrees}

        for _ in range(50):
            z = np.exp(1j * rng.uniform(0, 2 * np.pi, size=L))
            p = np.ones(1, dtype=complex)
            for i, n in enumerate(nhat):
                p = np.kron(z[i] ** np.arange(n + 1), p)
            direct = p.conj() @ G @ p
            series = sum(c * np.prod(z ** np.array(d))
                         for d, c in coeffs.items())
            assert abs(direct - series) < 1e-10

    def test_basis_index_strides(self):
        spec = GramBasisSpec.from_degrees((2, 3))
        assert spec.Nhat == 12
        assert spec.strides == (1, 3)
        assert spec.exponent(0) == (0, 0)
        assert spec.exponent(1) == (1, 0)   # first variable varies fastest
        assert spec.exponent(3) == (0, 1)
        assert spec.exponent(11) == (2, 3)


# ---------------------------------------------------------------------------
# domain polynomials
# ---------------------------------------------------------------------------


class TestDomainPolys:
    def test_coefficients(self):
        (dom,) = sos.build_domain_polys([3], 0)
        assert dom.period == 3
        assert dom.D.coeff((3,)) == QC(Fraction(1, 2))
        assert dom.D.coeff((-3,)) == QC(Fraction(1, 2))
        assert dom.D.coeff((0,)) == QC(Fraction(-1))
        assert dom.D.hermitian

    @pytest.mark.parametrize("period", [1, 2, 3, 5])
    def test_nonpositive_with_zeros_exactly_at_roots(self, period):
        (dom,) = sos.build_domain_polys([period], 0)
        grid = circle_grid(360 * period)
        vals = eval_on_grid(dom.D, [grid]).real
        assert vals.max() <= 1e-12
        zero_idx = set(np.flatnonzero(vals > -1e-12).tolist())
        expected = {360 * j for j in range(period)}
        assert zero_idx == expected

    def test_direction_specs_accepted(self):
        directions = [
            DirectionSpec(kind=INFINITE, n_pos=1, n_neg=1),
            DirectionSpec(kind=PERIODIC, n_pos=1, n_neg=1, period=4),
        ]
        polys = sos.build_domain_polys(directions, 1)
        assert len(polys) == 1
        assert polys[0].period == 4
        assert polys[0].D.L == 2
        assert polys[0].D.coeff((0, 4)) == QC(Fraction(1, 2))

    def test_infinite_direction_in_periodic_slot_rejected(self):
        directions = [
            DirectionSpec(kind=PERIODIC, n_pos=1, n_neg=1, period=2),
            DirectionSpec(kind=INFINITE, n_pos=1, n_neg=1),
        ]
        with pytest.raises(ValueError):
            sos.build_domain_polys(directions, 1)

    def test_invalid_period_rejected(self):
        with pytest.raises(ValueError):
            sos.build_domain_polys([0], 0)


# ---------------------------------------------------------------------------
# global positivity SDP
# ---------------------------------------------------------------------------


class TestGlobalSdp:
    def test_constant(self):
        F = TrigPoly.const(1, QC(Fraction(5)))
        sol = sdpsolver.solve(sos.assemble_global_sdp(F, (0,)))
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(5.0, abs=1e-6)

    def test_cosine_minimum(self):
        sol = sdpsolver.solve(sos.assemble_global_sdp(cosine_poly(), (0,)))
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(-2.0, abs=1e-4)

    def test_lowrank_poly_value_and_certificate(self):
        F = lowrank_psd_poly()
        prob = sos.assemble_global_sdp(F, (0, 0))
        assert prob.info["mode"] == "real"
        assert prob.blocks == [9]
        sol = sdpsolver.solve(prob)
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(3.3750, abs=5e-3)

        cert = sos.extract_certificate(prob, sol)
        rep = sos.verify_certificate(cert, [F])
        assert rep.valid
        assert rep.residual < 1e-6
        assert rep.min_eig >= -1e-8

    def test_lowrank_poly_grid_soundness(self):
        # any verified eps lower-bounds the true minimum (3.375, on-grid)
        F = lowrank_psd_poly()
        prob = sos.assemble_global_sdp(F, (0, 0))
        sol = sdpsolver.solve(prob)
        g = circle_grid(100)
        vals = eval_on_grid(F, [g, g]).real
        assert vals.min() == pytest.approx(3.375, abs=1e-9)
        assert vals.min() >= sol.objective - 1e-3

    def test_slack_never_decreases_value(self):
        F = lowrank_psd_poly()
        base = sdpsolver.solve(sos.assemble_global_sdp(F, (0, 0)))
        wide = sdpsolver.solve(sos.assemble_global_sdp(F, (1, 1)))
        assert wide.objective >= base.objective - 1e-5

    def test_complex_coefficients(self):
        # i z - i / z = -2 sin(theta); Hermitian but not real-coefficient
        F = TrigPoly(1, {(1,): QC(Fraction(0), Fraction(1)),
                         (-1,): QC(Fraction(0), Fraction(-1))})
        prob = sos.assemble_global_sdp(F, (0,))
        assert prob.info["mode"] == "complex"
        assert prob.blocks == [4]   # embedded 2x2 Hermitian block
        sol = sdpsolver.solve(prob)
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(-2.0, abs=1e-4)

        cert = sos.extract_certificate(prob, sol)
        G = cert.grams[0]
        assert G.shape == (2, 2)
        assert np.iscomplexobj(G)
        assert np.allclose(G, G.conj().T, atol=1e-9)
        rep = sos.verify_certificate(cert, [F])
        assert rep.valid
        assert rep.residual < 1e-6

    def test_non_hermitian_rejected(self):
        F = TrigPoly(1, {(1,): QC(1)})
        with pytest.raises(ValueError):
            sos.assemble_global_sdp(F, (0,))

    def test_bad_slack_rejected(self):
        F = cosine_poly()
        with pytest.raises(ValueError):
            sos.assemble_global_sdp(F, (0, 0))
        with pytest.raises(ValueError):
            sos.assemble_global_sdp(F, (-1,))

    def test_embedding_recovery_roundtrip(self):
        rng = np.random.default_rng(7)
        G = herm(rng, 5)
        E = sdpsolver.hermitian_embed(G)
        s = 5
        A, B, C = E[:s, :s], E[:s, s:], E[s:, s:]
        back = (A + C) / 2.0 + 1j * (B.T - B) / 2.0
        assert np.allclose(back, G, atol=1e-14)


# ---------------------------------------------------------------------------
# domain-restricted positivity SDP
# ---------------------------------------------------------------------------


class TestDomainSdp:
    def test_constant_on_domain(self):
        F = TrigPoly.const(1, QC(Fraction(7)))
        doms = sos.build_domain_polys([2], 0)
        prob = sos.assemble_domain_sdp([F], doms, (0,))
        # ledger: n = ceil(2/2) = 1, base Gram degree 2, multiplier 2 - 2 = 0
        assert prob.blocks == [3, 1]
        sol = sdpsolver.solve(prob)
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(7.0, abs=1e-5)

    def test_square_roots_attained(self):
        # min of 2 cos(theta) over {1, -1} is -2, met by an exact squared
        # representation, so the solver converges to the optimum.
        doms = sos.build_domain_polys([2], 0)
        sol = sdpsolver.solve(sos.assemble_domain_sdp([cosine_poly()], doms, (0,)))
        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(-2.0, abs=1e-4)

    def test_cube_roots_supremum(self):
        # min of 2 cos(theta) over cube roots is 2 cos(2 pi/3) = -1.  The
        # supremum is approached, not attained: near the domain points the
        # multiplier must blow up like 1/gap, so the first-order solver
        # creeps at O(1/k).  Assert a certified value just below -1.
        F = cosine_poly()
        doms = sos.build_domain_polys([3], 0)
        prob = sos.assemble_domain_sdp([F], doms, (0,))
        assert prob.blocks == [5, 2]
        sol = sdpsolver.solve(
            prob, sdpsolver.SolveOptions(max_iter=20000))
        assert sol.status in ("Optimal", "MaxIter")
        assert -1.05 <= sol.objective <= -1.0 + 1e-6
        assert sol.objective == pytest.approx(-1.0, abs=2e-2)

        cert = sos.extract_certificate(prob, sol)
        rep = sos.verify_certificate(cert, [F], doms, rtol=1e-5)
        assert rep.valid
        assert rep.min_eig >= -1e-8

    def test_domain_matches_global_when_domain_attains_global_min(self):
        # 2 cos(theta) + 3 has minimum 1 at z = -1, which lies on the
        # two-point domain, so both formulations certify the same value.
        F = TrigPoly(1, {(1,): QC(1), (-1,): QC(1), (0,): QC(3)})
        doms = sos.build_domain_polys([2], 0)
        sg = sdpsolver.solve(sos.assemble_global_sdp(F, (0,)))
        sd = sdpsolver.solve(sos.assemble_domain_sdp([F], doms, (0,)))
        assert sg.objective == pytest.approx(1.0, abs=1e-4)
        assert sd.objective == pytest.approx(1.0, abs=1e-4)

    def test_shared_eps_binds_to_worst_polynomial(self):
        F_easy = TrigPoly.const(1, QC(Fraction(9)))
        F_hard = TrigPoly.const(1, QC(Fraction(4)))
        doms = sos.build_domain_polys([2], 0)
        sol = sdpsolver.solve(
            sos.assemble_domain_sdp([F_easy, F_hard], doms, (0,)))
        assert sol.objective == pytest.approx(4.0, abs=1e-4)

    def test_multiplier_degree_ledger(self):
        # degree-(1,1) target with one period-3 cut in the second variable:
        # n = (1, 2), base degree (2, 4), multiplier degree (2, 1)
        F = TrigPoly(2, {(1, 1): QC(1), (-1, -1): QC(1), (0, 0): QC(4)})
        directions = [
            DirectionSpec(kind=INFINITE, n_pos=1, n_neg=1),
            DirectionSpec(kind=PERIODIC, n_pos=1, n_neg=1, period=3),
        ]
        doms = sos.build_domain_polys(directions, 1)
        prob = sos.assemble_domain_sdp([F], doms, (0, 0))
        assert prob.blocks == [15, 6]

    def test_requires_domain(self):
        with pytest.raises(ValueError):
            sos.assemble_domain_sdp([cosine_poly()], [], (0,))


# ---------------------------------------------------------------------------
# exact re-verification
# ---------------------------------------------------------------------------


class TestVerifyCertificate:
    def rank_one_setup(self):
        # |1 + z|^2 = 2 + z + 1/z with Gram [[1, 1], [1, 1]]
        F = TrigPoly(1, {(0,): QC(2), (1,): QC(1), (-1,): QC(1)})
        G = np.array([[1.0, 1.0], [1.0, 1.0]])
        cert = Certificate(
            epsilon=0.0,
            grams=[G],
            basis_specs=[GramBasisSpec.from_degrees((1,))],
        )
        return F, cert

    def test_exact_rank_one(self):
        F, cert = self.rank_one_setup()
        rep = sos.verify_certificate(cert, [F])
        assert rep.valid
        assert rep.residual == 0.0
        assert rep.l1_error == 0.0
        assert rep.min_eig >= -1e-9
        assert cert.valid is True   # fields refreshed in place

    def test_detects_coefficient_corruption(self):
        F, cert = self.rank_one_setup()
        cert.grams[0] = cert.grams[0].copy()
        cert.grams[0][0, 1] += 1e-2
        cert.grams[0][1, 0] += 1e-2
        rep = sos.verify_certificate(cert, [F])
        assert not rep.valid
        assert rep.residual == pytest.approx(1e-2, rel=1e-9)
        # both off-diagonal degrees are off by 1e-2, so the l1 sums them
        assert rep.l1_error == pytest.approx(2e-2, rel=1e-9)
        assert rep.worst_group == 0
        assert rep.worst_degree in ((1,), (-1,))

    def test_detects_wrong_epsilon(self):
        F, cert = self.rank_one_setup()
        cert.epsilon = 0.5
        rep = sos.verify_certificate(cert, [F])
        assert not rep.valid
        assert rep.worst_degree == (0,)
        assert rep.residual == pytest.approx(0.5, rel=1e-12)

    def test_detects_indefinite_gram(self):
        # coefficients match exactly but the Gram has a negative eigenvalue
        F = TrigPoly(1, {(0,): QC(0)})
        G = np.array([[1.0, 0.0], [0.0, -1.0]])
        # basis (1, z): diagonal contributes only to d = 0: 1 - 1 = 0 = F
        cert = Certificate(
            epsilon=0.0, grams=[G],
            basis_specs=[GramBasisSpec.from_degrees((1,))])
        rep = sos.verify_certificate(cert, [F])
        assert rep.residual == 0.0
        assert rep.min_eig == pytest.approx(-1.0, abs=1e-6)
        assert not rep.valid

    def test_block_count_mismatch_rejected(self):
        F, cert = self.rank_one_setup()
        with pytest.raises(ValueError):
            sos.verify_certificate(cert, [F, F])

    def test_gram_size_mismatch_rejected(self):
        F, cert = self.rank_one_setup()
        cert.grams[0] = np.eye(3)
        with pytest.raises(ValueError):
            sos.verify_certificate(cert, [F])


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------


class TestCertificateJson:
    def test_roundtrip_bit_exact(self):
        F = lowrank_psd_poly()
        prob = sos.assemble_global_sdp(F, (0, 0))
        sol = sdpsolver.solve(prob)
        cert = sos.extract_certificate(prob, sol)
        sos.verify_certificate(cert, [F])

        text = sos.certificate_to_json(cert)
        again = sos.certificate_from_json(text)
        assert sos.certificate_to_json(again) == text
        assert again.epsilon == cert.epsilon
        assert again.valid == cert.valid
        assert np.array_equal(np.asarray(again.grams[0]),
                              np.asarray(cert.grams[0]))

        rep = sos.verify_certificate(again, [F])
        assert rep.valid
        assert rep.residual == cert.residual

    def test_real_blocks_stay_real(self):
        cert = Certificate(
            epsilon=1.0,
            grams=[np.eye(2)],
            basis_specs=[GramBasisSpec.from_degrees((1,))],
        )
        doc = json.loads(sos.certificate_to_json(cert))
        assert doc["blocks"][0]["im"] == [["0.0", "0.0"], ["0.0", "0.0"]]
        back = sos.certificate_from_json(json.dumps(doc))
        assert not np.iscomplexobj(back.grams[0])


# ---------------------------------------------------------------------------
# exhaustive evaluation on fully periodic domains
# ---------------------------------------------------------------------------


class TestFiniteGridPositivity:
    def test_constant(self):
        F = TrigPoly.const(1, QC(Fraction(5)))
        val, point, k = sos.finite_grid_positivity([F], [1])
        assert val == pytest.approx(5.0, abs=1e-15)
        assert point == (pytest.approx(1 + 0j),)
        assert k == 0

    def test_two_point_minimum(self):
        val, point, k = sos.finite_grid_positivity([cosine_poly()], [2])
        assert val == pytest.approx(-2.0, abs=1e-15)
        assert point[0] == pytest.approx(-1 + 0j, abs=1e-12)

    def test_group_selection(self):
        F_hi = TrigPoly.const(1, QC(Fraction(5)))
        F_lo = TrigPoly.const(1, QC(Fraction(3)))
        val, _, k = sos.finite_grid_positivity([F_hi, F_lo], [2])
        assert val == pytest.approx(3.0)
        assert k == 1

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(23)
        coeffs = {(0, 0): QC(Fraction(2))}
        for d in [(1, 0), (0, 1), (1, 2), (2, 1)]:
            c = QC(Fraction(rng.integers(-4, 5).item(), 8),
                   Fraction(rng.integers(-4, 5).item(), 8))
            coeffs[d] = c
            coeffs[tuple(-x for x in d)] = c.conjugate()
        F = TrigPoly(2, coeffs)
        assert F.hermitian

        val, point, _ = sos.finite_grid_positivity([F], [3, 4])
        brute = eval_on_grid(F, [circle_grid(3), circle_grid(4)]).real
        assert val == pytest.approx(brute.min(), abs=1e-12)
        assert complex(F.eval(point)) == pytest.approx(val, abs=1e-12)

    def test_period_validation(self):
        with pytest.raises(ValueError):
            sos.finite_grid_positivity([cosine_poly()], [2, 2])
        with pytest.raises(ValueError):
            sos.finite_grid_positivity([cosine_poly()], [0])
