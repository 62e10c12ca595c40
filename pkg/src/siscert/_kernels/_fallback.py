"""Pure-numpy implementations of the hot kernels.

The compiled extension (``_core``) mirrors these routines exactly; both
backends must stay behaviourally identical so that test suites and
benchmarks can swap them freely via SISCERT_PURE_PYTHON.
"""

import numpy as np

_SQRT2 = float(np.sqrt(2.0))
_INV_SQRT2 = 1.0 / _SQRT2

# ---------------------------------------------------------------------------
# symmetric-vector (svec) packing
#
# A symmetric s-by-s block is stored as its upper triangle in row-major
# order, with off-diagonal entries scaled by sqrt(2) so that the packed
# Euclidean inner product equals the Frobenius inner product of the
# matrices.  Both backends and the problem assembler must agree on this
# layout; it is defined once here and once (identically) in the compiled
# core.
# ---------------------------------------------------------------------------


def block_indices(s):
    """Upper-triangle index arrays (rows, cols, offdiag mask) for size s."""
    rows, cols = np.triu_indices(s)
    return rows, cols, rows != cols


def svec_to_mat(v, s, rows, cols, offd):
    """Unpack a packed symmetric block into a full dense matrix."""
    vals = np.array(v, dtype=np.float64, copy=True)
    vals[offd] *= _INV_SQRT2
    M = np.zeros((s, s))
    M[rows, cols] = vals
    M[cols, rows] = vals
    return M


def mat_to_svec(M, rows, cols, offd):
    """Pack the upper triangle of a symmetric matrix (sqrt(2) off-diag)."""
    v = np.array(M[rows, cols], dtype=np.float64, copy=True)
    v[offd] *= _SQRT2
    return v


def _project_psd(v, s, rows, cols, offd):
    """Euclidean projection of a packed symmetric block onto the PSD cone."""
    M = svec_to_mat(v, s, rows, cols, offd)
    w, Q = np.linalg.eigh(M)
    if w[0] >= 0.0:
        return v
    if w[-1] <= 0.0:
        return np.zeros_like(v)
    pos = w > 0.0
    P = (Q[:, pos] * w[pos]) @ Q[:, pos].T
    return mat_to_svec(P, rows, cols, offd)


# ---------------------------------------------------------------------------
# ADMM iteration for  min c'x  s.t.  Ax = b,  x in (free space) x (PSD blocks)
#
# x-update: projection of (z - u - c/rho) onto {x : Ax = b} using the
#           precomputed pseudo-inverse of AA'
# z-update: projection onto the cone (identity on free variables,
#           eigenvalue clipping per PSD block), applied to the
#           over-relaxed point
# u-update: scaled dual ascent
#
# Status codes: 0 converged, 1 iteration limit, 2 divergence detected.
# ---------------------------------------------------------------------------


def admm_run(A, b, c, AAti, block_sizes, n_free, rho, alpha,
             eps_abs, eps_rel, max_iter, check_every, adapt_rho):
    """Run the operator-splitting loop; returns the full iterate state.

    Returns (x, z, u, iterations, status, primal_res, dual_res, gap, rho).
    ``u`` is the scaled dual variable; the unscaled cone multiplier is
    rho * u.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    AAti = np.ascontiguousarray(AAti, dtype=np.float64)
    m, N = A.shape

    idx = []
    off = int(n_free)
    for s in block_sizes:
        rows, cols, offd = block_indices(int(s))
        t = rows.size
        idx.append((off, off + t, int(s), rows, cols, offd))
        off += t
    if off != N:
        raise ValueError("block sizes inconsistent with variable count")

    x = np.zeros(N)
    z = np.zeros(N)
    u = np.zeros(N)
    rho = float(rho)
    sqrt_n = float(np.sqrt(N))
    b_norm = float(np.linalg.norm(b))

    status = 1
    it = 0
    rp = rd = gap = float("inf")
    while it < max_iter:
        it += 1

        # x-update: affine projection of (z - u - c/rho)
        w = z - u - c / rho
        lam = AAti @ (b - A @ w)
        x = w + A.T @ lam

        # over-relaxation, then cone projection
        xh = alpha * x + (1.0 - alpha) * z
        t_vec = xh + u
        z_new = t_vec.copy()
        for a0, a1, s, rows, cols, offd in idx:
            z_new[a0:a1] = _project_psd(t_vec[a0:a1], s, rows, cols, offd)
        u = u + xh - z_new

        if it % check_every == 0 or it == max_iter:
            rp = float(np.linalg.norm(x - z_new))
            rd = rho * float(np.linalg.norm(z_new - z))
            z = z_new
            pobj = float(c @ x)
            dobj = float(b @ (rho * lam))
            gap = abs(pobj - dobj)
            x_norm = float(np.linalg.norm(x))
            z_norm = float(np.linalg.norm(z))
            s_norm = rho * float(np.linalg.norm(u))
            eps_pri = sqrt_n * eps_abs + eps_rel * max(x_norm, z_norm)
            eps_dua = sqrt_n * eps_abs + eps_rel * s_norm
            eps_gap = eps_abs + eps_rel * max(abs(pobj), abs(dobj), 1.0)
            if rp <= eps_pri and rd <= eps_dua and gap <= eps_gap:
                status = 0
                break
            if x_norm > 1e10 * (1.0 + b_norm) or s_norm > 1e12:
                status = 2
                break
            if adapt_rho:
                if rp > 10.0 * rd and rho < 1e6:
                    rho *= 2.0
                    u *= 0.5
                elif rd > 10.0 * rp and rho > 1e-6:
                    rho *= 0.5
                    u *= 2.0
        else:
            z = z_new

    return x, z, u, it, status, rp, rd, gap, rho


# ---------------------------------------------------------------------------
# batched spectral abscissa via Lyapunov bisection
# ---------------------------------------------------------------------------


def _kron_batch(X, Y):
    """Batched Kronecker product of (B,n,n) stacks."""
    B, n, _ = X.shape
    m = Y.shape[1]
    return np.einsum("bij,bkl->bikjl", X, Y).reshape(B, n * m, n * m)


def _posdef_batch(P):
    """Vectorized Cholesky pivot sweep: True where Hermitian P is PD.

    Garbage inputs (inf/nan from near-singular upstream solves) are
    rejected up front; overflow inside the sweep is expected for wild
    but finite inputs and resolves to False via nan pivots.
    """
    B, n, _ = P.shape
    A = P.copy()
    ok = np.isfinite(A).all(axis=(1, 2))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(n):
            d = A[:, k, k].real
            ok &= d > 0.0
            safe = np.where(ok, d, 1.0)
            if k + 1 < n:
                col = A[:, k + 1:, k] / safe[:, None]
                A[:, k + 1:, k + 1:] -= col[:, :, None] * np.conj(
                    A[:, k + 1:, k][:, None, :])
    return ok


def _hurwitz_batch(Ms):
    """True per batch element iff all eigenvalues strictly left of axis.

    Solves M^H P + P M = -I as a dense linear system in vec(P); PD of P is
    decided by a Cholesky pivot sweep.  True answers are self-certifying:
    the Hermitized P must leave a residual E = M^H P + P M + I with
    n * max|E_ij| < 1/4 (spectral norm below 1), which makes
    M^H P + P M negative definite, so PD P proves Hurwitz regardless of
    how ill-conditioned the solve was.  Singular or near-marginal
    elements fail the residual bound and report False.
    """
    B, n, _ = Ms.shape
    eye = np.broadcast_to(np.eye(n, dtype=np.complex128), (B, n, n))
    MT = np.transpose(Ms, (0, 2, 1))
    S = _kron_batch(np.conj(MT), eye) + _kron_batch(eye, MT)
    rhs = np.broadcast_to(-np.eye(n, dtype=np.complex128).reshape(n * n),
                          (B, n * n))
    ok0 = np.ones(B, dtype=bool)
    try:
        sol = np.linalg.solve(S, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.empty((B, n * n), dtype=np.complex128)
        for i in range(B):
            try:
                sol[i] = np.linalg.solve(S[i], rhs[i])
            except np.linalg.LinAlgError:
                ok0[i] = False
                sol[i] = 0.0
    P = sol.reshape(B, n, n)
    P = 0.5 * (P + np.conj(np.transpose(P, (0, 2, 1))))
    finite = (np.isfinite(P.real).all(axis=(1, 2))
              & np.isfinite(P.imag).all(axis=(1, 2)))
    P[~finite] = 0.0
    MH = np.conj(np.transpose(Ms, (0, 2, 1)))
    E = MH @ P + P @ Ms + np.eye(n, dtype=np.complex128)
    resid_ok = np.abs(E).max(axis=(1, 2)) < 0.25 / n
    return ok0 & finite & resid_ok & _posdef_batch(P)


def abscissa_batch(mats, tol):
    """Spectral abscissas of a stack of square matrices, within tol.

    Bisection on the shift a: the abscissa is the infimum of shifts for
    which M - a*I is Hurwitz, tested through the Lyapunov equation (never
    an eigensolver).  Brackets come from the row-sum norm bound.
    """
    mats = np.ascontiguousarray(np.asarray(mats, dtype=np.complex128))
    if mats.ndim == 2:
        mats = mats[None]
    B, n, _ = mats.shape
    if n == 0 or B == 0:
        return np.zeros(B)
    tol = float(tol)
    eye = np.eye(n, dtype=np.complex128)
    bound = np.abs(mats).sum(axis=2).max(axis=1) + 1.0
    lo = -bound.copy()
    hi = bound.copy()
    span = float(2.0 * bound.max())
    steps = max(1, int(np.ceil(np.log2(span / tol))))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        shifted = mats - mid[:, None, None] * eye
        ok = _hurwitz_batch(shifted)
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    return 0.5 * (lo + hi)
