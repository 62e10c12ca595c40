# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: initializedcheck=False, language_level=3
"""Compiled implementations of the hot kernels.

Behavioural mirror of ``_fallback``: same algorithms, same status codes,
same stopping rules.  Dense spectral decompositions and linear solves go
through the very same numpy LAPACK entry points as the fallback; what is
compiled away is the per-block packing, the cone projection bookkeeping,
the elementwise iterate updates, and the batched pivot sweeps.
"""

import numpy as np

cimport cython
from libc.math cimport ceil, hypot, isfinite, log2, sqrt

cdef double _SQRT2 = sqrt(2.0)
cdef double _INV_SQRT2 = 1.0 / sqrt(2.0)


# ---------------------------------------------------------------------------
# symmetric-vector packing (layout shared with the fallback: row-major
# upper triangle, off-diagonal entries scaled by sqrt(2))
# ---------------------------------------------------------------------------


cdef void _unpack_block(const double[::1] v, Py_ssize_t a0, Py_ssize_t s,
                        double[:, ::1] M) noexcept nogil:
    cdef Py_ssize_t i, j, k = a0
    cdef double val
    for i in range(s):
        for j in range(i, s):
            val = v[k]
            if i != j:
                val *= _INV_SQRT2
            M[i, j] = val
            M[j, i] = val
            k += 1


cdef void _pack_block(const double[:, ::1] M, Py_ssize_t s,
                      double[::1] out, Py_ssize_t a0) noexcept nogil:
    cdef Py_ssize_t i, j, k = a0
    for i in range(s):
        for j in range(i, s):
            if i == j:
                out[k] = M[i, j]
            else:
                out[k] = M[i, j] * _SQRT2
            k += 1


cdef void _recompose_clipped(const double[:, ::1] Q, const double[::1] w,
                             Py_ssize_t s, double[:, ::1] P) noexcept nogil:
    """P = sum over positive eigenvalues of w[p] * Q[:,p] Q[:,p]^T."""
    cdef Py_ssize_t i, j, p
    cdef double acc
    for i in range(s):
        for j in range(i, s):
            acc = 0.0
            for p in range(s):
                if w[p] > 0.0:
                    acc += w[p] * Q[i, p] * Q[j, p]
            P[i, j] = acc
            P[j, i] = acc


cdef double _nrm2(const double[::1] v) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(v.shape[0]):
        acc += v[i] * v[i]
    return sqrt(acc)


cdef double _nrm2_diff(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, d
    for i in range(a.shape[0]):
        d = a[i] - b[i]
        acc += d * d
    return sqrt(acc)


cdef double _dot(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


# ---------------------------------------------------------------------------
# ADMM iteration (see the fallback for the algorithm notes)
# ---------------------------------------------------------------------------


def admm_run(A, b, c, AAti, block_sizes, n_free, rho, alpha,
             eps_abs, eps_rel, max_iter, check_every, adapt_rho):
    """Run the operator-splitting loop; returns the full iterate state.

    Returns (x, z, u, iterations, status, primal_res, dual_res, gap, rho).
    ``u`` is the scaled dual variable; the unscaled cone multiplier is
    rho * u.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b_arr = np.ascontiguousarray(b, dtype=np.float64)
    c_arr = np.ascontiguousarray(c, dtype=np.float64)
    AAti = np.ascontiguousarray(AAti, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t N = A.shape[1]

    offsets = []
    sizes = []
    cdef Py_ssize_t off = int(n_free), s
    cdef Py_ssize_t max_s = 0
    for size in block_sizes:
        s = int(size)
        offsets.append(off)
        sizes.append(s)
        off += (s * (s + 1)) // 2
        if s > max_s:
            max_s = s
    if off != N:
        raise ValueError("block sizes inconsistent with variable count")
    cdef Py_ssize_t n_blocks = len(sizes)
    cdef Py_ssize_t[::1] boff = np.array(offsets, dtype=np.intp) \
        if n_blocks else np.empty(0, dtype=np.intp)
    cdef Py_ssize_t[::1] bsz = np.array(sizes, dtype=np.intp) \
        if n_blocks else np.empty(0, dtype=np.intp)

    x_arr = np.zeros(N)
    z_arr = np.zeros(N)
    u_arr = np.zeros(N)
    w_arr = np.empty(N)
    xh_arr = np.empty(N)
    t_arr = np.empty(N)
    znew_arr = np.empty(N)
    Mbuf = np.empty((max_s, max_s)) if max_s else np.empty((1, 1))
    Pbuf = np.empty((max_s, max_s)) if max_s else np.empty((1, 1))

    cdef double[::1] x = x_arr, z = z_arr, u = u_arr
    cdef double[::1] w = w_arr, xh = xh_arr, t = t_arr, znew = znew_arr
    cdef double[::1] bv = b_arr, cv = c_arr
    cdef double[:, ::1] Mb = Mbuf, Pb = Pbuf

    cdef double rho_c = float(rho)
    cdef double alpha_c = float(alpha)
    cdef double eps_abs_c = float(eps_abs), eps_rel_c = float(eps_rel)
    cdef Py_ssize_t max_iter_c = int(max_iter)
    cdef Py_ssize_t check_every_c = int(check_every)
    cdef bint adapt = bool(adapt_rho)
    cdef double sqrt_n = sqrt(<double> N)
    cdef double b_norm = _nrm2(bv)

    cdef int status = 1
    cdef Py_ssize_t it = 0, i, bi, a0
    cdef double rp = float("inf"), rd = float("inf"), gap = float("inf")
    cdef double pobj, dobj, x_norm, z_norm, s_norm
    cdef double eps_pri, eps_dua, eps_gap
    cdef double[::1] lamv, ev
    lam_arr = np.zeros(m)
    cdef double wmin, wmax

    while it < max_iter_c:
        it += 1

        # x-update: affine projection of (z - u - c/rho)
        for i in range(N):
            w[i] = z[i] - u[i] - cv[i] / rho_c
        lam_arr = AAti.dot(b_arr - A.dot(w_arr))
        x_arr2 = w_arr + A.T.dot(lam_arr)
        x = x_arr2
        x_arr = x_arr2

        # over-relaxation, then cone projection
        for i in range(N):
            xh[i] = alpha_c * x[i] + (1.0 - alpha_c) * z[i]
            t[i] = xh[i] + u[i]
            znew[i] = t[i]
        for bi in range(n_blocks):
            a0 = boff[bi]
            s = bsz[bi]
            _unpack_block(t, a0, s, Mb)
            evals, Q = np.linalg.eigh(Mbuf[:s, :s])
            wmin = evals[0]
            wmax = evals[s - 1]
            if wmin >= 0.0:
                continue
            if wmax <= 0.0:
                for i in range(a0, a0 + (s * (s + 1)) // 2):
                    znew[i] = 0.0
                continue
            ev = evals
            Qc = np.ascontiguousarray(Q)
            _recompose_clipped(Qc, ev, s, Pb)
            _pack_block(Pb, s, znew, a0)
        for i in range(N):
            u[i] = u[i] + xh[i] - znew[i]

        if it % check_every_c == 0 or it == max_iter_c:
            rp = _nrm2_diff(x, znew)
            rd = rho_c * _nrm2_diff(znew, z)
            for i in range(N):
                z[i] = znew[i]
            lamv = lam_arr
            pobj = _dot(cv, x)
            dobj = rho_c * _dot(bv, lamv)
            gap = abs(pobj - dobj)
            x_norm = _nrm2(x)
            z_norm = _nrm2(z)
            s_norm = rho_c * _nrm2(u)
            eps_pri = sqrt_n * eps_abs_c + eps_rel_c * max(x_norm, z_norm)
            eps_dua = sqrt_n * eps_abs_c + eps_rel_c * s_norm
            eps_gap = eps_abs_c + eps_rel_c * max(abs(pobj), abs(dobj), 1.0)
            if rp <= eps_pri and rd <= eps_dua and gap <= eps_gap:
                status = 0
                break
            if x_norm > 1e10 * (1.0 + b_norm) or s_norm > 1e12:
                status = 2
                break
            if adapt:
                if rp > 10.0 * rd and rho_c < 1e6:
                    rho_c *= 2.0
                    for i in range(N):
                        u[i] *= 0.5
                elif rd > 10.0 * rp and rho_c > 1e-6:
                    rho_c *= 0.5
                    for i in range(N):
                        u[i] *= 2.0
        else:
            for i in range(N):
                z[i] = znew[i]

    return (x_arr, z_arr, u_arr, int(it), int(status),
            float(rp), float(rd), float(gap), float(rho_c))


# ---------------------------------------------------------------------------
# batched spectral abscissa via Lyapunov bisection
# ---------------------------------------------------------------------------


cdef bint _posdef_one(double complex[:, :, ::1] P, Py_ssize_t bi,
                      double complex[:, ::1] work,
                      Py_ssize_t n) noexcept nogil:
    """Cholesky pivot sweep on one Hermitian matrix of the stack."""
    cdef Py_ssize_t i, j, k
    cdef double d
    cdef double complex col_i
    for i in range(n):
        for j in range(n):
            if not (isfinite(P[bi, i, j].real) and isfinite(P[bi, i, j].imag)):
                return False
            work[i, j] = P[bi, i, j]
    for k in range(n):
        d = work[k, k].real
        if not (d > 0.0):
            return False
        for i in range(k + 1, n):
            col_i = work[i, k] / d
            for j in range(k + 1, n):
                work[i, j] = work[i, j] - col_i * work[j, k].conjugate()
    return True


def _posdef_batch(P):
    """Vectorized Cholesky pivot sweep: True where Hermitian P is PD."""
    P = np.ascontiguousarray(P, dtype=np.complex128)
    cdef Py_ssize_t B = P.shape[0], n = P.shape[1], bi
    out = np.zeros(B, dtype=bool)
    if n == 0:
        out[:] = True
        return out
    cdef double complex[:, :, ::1] Pv = P
    work_arr = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] work = work_arr
    for bi in range(B):
        out[bi] = _posdef_one(Pv, bi, work, n)
    return out


cdef void _assemble_lyap(const double complex[:, :, ::1] M, Py_ssize_t bi,
                         Py_ssize_t n, double complex[:, ::1] S) noexcept nogil:
    """S[(i,k),(j,l)] = conj(M[j,i]) delta_kl + delta_ij M[l,k]."""
    cdef Py_ssize_t i, j, k, l
    for i in range(n):
        for k in range(n):
            for j in range(n):
                for l in range(n):
                    S[i * n + k, j * n + l] = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                S[i * n + k, j * n + k] = \
                    S[i * n + k, j * n + k] + M[bi, j, i].conjugate()
    for i in range(n):
        for k in range(n):
            for l in range(n):
                S[i * n + k, i * n + l] = \
                    S[i * n + k, i * n + l] + M[bi, l, k]


def _hurwitz_batch(Ms):
    """True per batch element iff all eigenvalues strictly left of axis.

    True answers are self-certifying: the Hermitized P must leave a
    residual E = M^H P + P M + I with n * max|E_ij| < 1/4 (spectral norm
    below 1), which makes M^H P + P M negative definite, so PD P proves
    Hurwitz regardless of how ill-conditioned the solve was.
    """
    Ms = np.ascontiguousarray(Ms, dtype=np.complex128)
    cdef Py_ssize_t B = Ms.shape[0], n = Ms.shape[1], bi
    S = np.empty((B, n * n, n * n), dtype=np.complex128)
    cdef double complex[:, :, ::1] Mv = Ms
    cdef double complex[:, :, ::1] Sv = S
    for bi in range(B):
        _assemble_lyap(Mv, bi, n, Sv[bi])
    rhs = np.broadcast_to(-np.eye(n, dtype=np.complex128).reshape(n * n),
                          (B, n * n))
    ok0 = np.ones(B, dtype=bool)
    try:
        sol = np.linalg.solve(S, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.empty((B, n * n), dtype=np.complex128)
        for bi in range(B):
            try:
                sol[bi] = np.linalg.solve(S[bi], rhs[bi])
            except np.linalg.LinAlgError:
                ok0[bi] = False
                sol[bi] = 0.0
    P = sol.reshape(B, n, n)
    P = np.ascontiguousarray(0.5 * (P + np.conj(np.transpose(P, (0, 2, 1)))))
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
    cdef Py_ssize_t B = mats.shape[0], n = mats.shape[1]
    if n == 0 or B == 0:
        return np.zeros(B)
    cdef double tol_c = float(tol)
    cdef double complex[:, :, ::1] Mv = mats

    lo_arr = np.empty(B)
    hi_arr = np.empty(B)
    cdef double[::1] lo = lo_arr, hi = hi_arr
    cdef Py_ssize_t bi, i, j
    cdef double rowsum, bound, span = 0.0
    for bi in range(B):
        bound = 0.0
        for i in range(n):
            rowsum = 0.0
            for j in range(n):
                rowsum += hypot(Mv[bi, i, j].real, Mv[bi, i, j].imag)
            if rowsum > bound:
                bound = rowsum
        bound += 1.0
        lo[bi] = -bound
        hi[bi] = bound
        if 2.0 * bound > span:
            span = 2.0 * bound

    cdef Py_ssize_t steps = <Py_ssize_t> ceil(log2(span / tol_c))
    if steps < 1:
        steps = 1
    shifted_arr = np.empty((B, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] sh = shifted_arr
    cdef double mid
    cdef Py_ssize_t step
    for step in range(steps):
        for bi in range(B):
            mid = 0.5 * (lo[bi] + hi[bi])
            for i in range(n):
                for j in range(n):
                    sh[bi, i, j] = Mv[bi, i, j]
                sh[bi, i, i] = sh[bi, i, i] - mid
        ok = _hurwitz_batch(shifted_arr)
        for bi in range(B):
            mid = 0.5 * (lo[bi] + hi[bi])
            if ok[bi]:
                hi[bi] = mid
            else:
                lo[bi] = mid
    return 0.5 * (lo_arr + hi_arr)
