"""Small dense semidefinite programming: linear objectives over PSD blocks.

A problem is stated over a Cartesian product of free scalar variables and
real symmetric matrix blocks constrained to be positive semidefinite:

    maximize    <objective, (f, M_1, ..., M_B)>
    subject to  <C_r,       (f, M_1, ..., M_B)> = rhs_r    for each r
                M_b  PSD    for each block b

All functionals are linear with only upper-triangle block coefficients
stored; a coefficient v at (i, j), i < j, acts on the symmetric pair, i.e.
contributes v * (M[i,j] + M[j,i]).  Complex Hermitian blocks are handled
upstream through :func:`hermitian_embed`.

The solver is a first-order operator-splitting (ADMM) iteration alternating
an affine projection onto the equality constraints (through a precomputed
pseudo-inverse) with an eigenvalue-clipping projection onto the PSD cone.
It is deterministic; the seed is recorded for interface stability but the
iteration involves no randomness.  Certificates produced from solutions are
re-verified independently, so the solver only needs to land inside the
verifiable basin.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import BACKEND, admm_run
from ._kernels._fallback import block_indices, svec_to_mat

__all__ = [
    "FREE",
    "SdpProblem",
    "SdpSolution",
    "SolveOptions",
    "solve",
    "hermitian_embed",
    "psd_check",
    "matrix_entries",
]

#: Block-id sentinel marking a free (unconstrained) scalar variable.
FREE = -1

_SQRT2 = math.sqrt(2.0)


def matrix_entries(block, C, tol=0.0):
    """Upper-triangle entry tuples for the functional ``<C, M_block>``.

    ``C`` must be square and symmetric within ``tol``.  Entries with
    magnitude ≤ tol are dropped.
    """
    C = np.asarray(C, dtype=np.float64)
    s = C.shape[0]
    if C.shape != (s, s):
        raise ValueError("coefficient matrix must be square")
    if s and np.abs(C - C.T).max() > max(tol, 1e-12 * (1 + np.abs(C).max())):
        raise ValueError("coefficient matrix must be symmetric")
    entries = []
    for i in range(s):
        for j in range(i, s):
            v = float(C[i, j])
            if abs(v) > tol:
                entries.append((block, i, j, v))
    return entries


class SdpProblem:
    """Mutable container for one SDP instance (see module docstring)."""

    def __init__(self, blocks, free_vars=0):
        self.blocks = [int(s) for s in blocks]
        if any(s < 1 for s in self.blocks):
            raise ValueError("block dimensions must be >= 1")
        self.free_vars = int(free_vars)
        if self.free_vars < 0:
            raise ValueError("free variable count must be >= 0")
        self.constraints = []
        self.objective = ()

    # -- layout -----------------------------------------------------------

    @property
    def num_vars(self):
        """Packed length: free scalars then svec'd upper triangles."""
        return self.free_vars + sum(s * (s + 1) // 2 for s in self.blocks)

    def _block_offset(self, b):
        off = self.free_vars
        for s in self.blocks[:b]:
            off += s * (s + 1) // 2
        return off

    def _check_entries(self, entries):
        cleaned = []
        for block, i, j, value in entries:
            block = int(block)
            i, j = int(i), int(j)
            value = float(value)
            if not math.isfinite(value):
                raise ValueError("non-finite coefficient")
            if block == FREE:
                if not 0 <= i < self.free_vars:
                    raise IndexError(f"free variable {i} out of range")
                j = 0
            else:
                if not 0 <= block < len(self.blocks):
                    raise IndexError(f"block {block} out of range")
                s = self.blocks[block]
                if not (0 <= i < s and 0 <= j < s):
                    raise IndexError(f"entry ({i},{j}) outside block of size {s}")
                if i > j:
                    i, j = j, i
            cleaned.append((block, i, j, value))
        return tuple(cleaned)

    # -- construction -----------------------------------------------------

    def add_constraint(self, entries, rhs):
        """Append one equality constraint ``<entries, vars> = rhs``."""
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ValueError("non-finite right-hand side")
        self.constraints.append((self._check_entries(entries), rhs))

    def set_objective(self, entries):
        """Set the functional to maximize."""
        self.objective = self._check_entries(entries)

    # -- dense assembly ---------------------------------------------------

    def _row(self, entries):
        """Dense packed-coordinate row for a functional (svec scaling)."""
        row = np.zeros(self.num_vars)
        for block, i, j, value in entries:
            if block == FREE:
                row[i] += value
            else:
                s = self.blocks[block]
                col = self._block_offset(block) + i * s - i * (i - 1) // 2 + (j - i)
                row[col] += value if i == j else _SQRT2 * value
        return row

    # -- debugging dump ---------------------------------------------------

    def dump(self, path):
        """Write a plain sparse text dump for external cross-checks.

        One line per entry: ``con-id block-id row col value``, where
        block-id -1 denotes a free variable (row = its index, col = 0),
        con-id -1 holds the objective, and con-id -2 holds right-hand
        sides (block-id -2, value in the last field).
        """
        lines = [
            "# sdp dump v1",
            "# blocks: " + " ".join(str(s) for s in self.blocks),
            f"# free: {self.free_vars}",
            "# line format: con-id block-id row col value",
        ]
        for block, i, j, v in self.objective:
            lines.append(f"-1 {block} {i} {j} {v!r}")
        for cid, (entries, rhs) in enumerate(self.constraints):
            for block, i, j, v in entries:
                lines.append(f"{cid} {block} {i} {j} {v!r}")
            lines.append(f"{cid} -2 0 0 {rhs!r}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class SolveOptions:
    """Solver knobs; defaults land well inside the verification basin."""

    eps_abs: float = 1e-8
    eps_rel: float = 1e-7
    max_iter: int = 200000
    seed: int = 0
    rho: float = 1.0
    alpha: float = 1.6
    check_every: int = 25
    adapt_rho: bool = True


@dataclass
class SdpSolution:
    """Outcome of :func:`solve`; blocks are dense symmetric matrices."""

    status: str
    objective: float
    blocks: list
    free_values: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float
    info: dict = field(default_factory=dict)


def solve(problem, opts=None):
    """Maximize the problem's objective; never raises on non-convergence.

    Status is one of Optimal / Infeasible / Unbounded / MaxIter.  On
    Optimal the residuals are within the configured tolerances; the PSD
    blocks are taken from the cone-feasible iterate, the free variables
    (and objective) from the affine-feasible one, so any mismatch between
    the two is bounded by the reported primal residual.
    """
    if opts is None:
        opts = SolveOptions()
    n = problem.num_vars

    rows = []
    rhs = []
    for entries, r in problem.constraints:
        row = problem._row(entries)
        nrm = float(np.linalg.norm(row))
        if nrm == 0.0:
            if abs(r) > 1e-12:
                return SdpSolution(
                    status="Infeasible", objective=float("nan"),
                    blocks=[], free_values=np.zeros(problem.free_vars),
                    iterations=0, primal_residual=float("inf"),
                    dual_residual=float("inf"), gap=float("inf"),
                    info={"backend": BACKEND, "reason": "zero row, nonzero rhs"},
                )
            continue
        rows.append(row / nrm)
        rhs.append(r / nrm)

    m = len(rows)
    A = np.array(rows) if m else np.zeros((0, n))
    b = np.array(rhs) if m else np.zeros(0)
    obj = problem._row(problem.objective)
    c = -obj  # kernel minimizes

    AAt = A @ A.T
    AAti = np.linalg.pinv(AAt, hermitian=True) if m else np.zeros((0, 0))

    x, z, u, iters, code, rp, rd, gap, rho_final = admm_run(
        A, b, c, AAti, problem.blocks, problem.free_vars,
        opts.rho, opts.alpha, opts.eps_abs, opts.eps_rel,
        opts.max_iter, opts.check_every, opts.adapt_rho,
    )

    obj_value = float(obj @ x)
    rhs_scale = max((abs(r) for _, r in problem.constraints), default=0.0)
    if code == 0:
        status = "Optimal"
    elif code == 1:
        # A runaway objective with exhausted iterations is the footprint of
        # an unbounded ray (the iterates drift along it linearly).
        if abs(obj_value) > 1e4 * (1.0 + rhs_scale):
            status = "Unbounded"
        else:
            status = "MaxIter"
    else:
        x_norm = float(np.linalg.norm(x))
        status = "Unbounded" if x_norm > 1e9 * (1.0 + float(np.linalg.norm(b))) \
            else "Infeasible"

    blocks = []
    off = problem.free_vars
    for s in problem.blocks:
        rows_i, cols_i, offd = block_indices(s)
        t = rows_i.size
        blocks.append(svec_to_mat(z[off:off + t], s, rows_i, cols_i, offd))
        off += t

    return SdpSolution(
        status=status,
        objective=obj_value,
        blocks=blocks,
        free_values=np.array(x[:problem.free_vars]),
        iterations=int(iters),
        primal_residual=float(rp),
        dual_residual=float(rd),
        gap=float(gap),
        info={"backend": BACKEND, "rho": float(rho_final), "seed": opts.seed},
    )


def hermitian_embed(H, tol=1e-12):
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]].

    The embedding is PSD exactly when H is, and its spectrum is that of H
    with every eigenvalue doubled in multiplicity (so traces double, which
    constraint assembly must account for).  Raises ValueError if H is not
    Hermitian within tol.
    """
    H = np.asarray(H, dtype=np.complex128)
    s = H.shape[0]
    if H.ndim != 2 or H.shape != (s, s):
        raise ValueError("input must be a square matrix")
    scale = 1.0 + (float(np.abs(H).max()) if s else 0.0)
    if s and float(np.abs(H - H.conj().T).max()) > tol * scale:
        raise ValueError("input is not Hermitian within tolerance")
    re = H.real
    im = H.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    return np.vstack([top, bot])


def psd_check(M, tol=1e-8):
    """(is_psd, min_eig_estimate) via bisection on shifted Cholesky.

    The minimum eigenvalue is located by bisecting the largest shift a for
    which M - a*I admits a Cholesky factorization (no eigensolver is
    involved).  Returns True iff the estimate is ≥ -tol.  Complex Hermitian
    input is handled through its real embedding, which preserves the
    minimum eigenvalue.
    """
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if M.size and float(np.abs(M.imag).max()) > 0.0:
            M = hermitian_embed(M, tol=max(tol, 1e-12))
        else:
            M = M.real
    S = np.asarray(M, dtype=np.float64)
    s = S.shape[0]
    if S.ndim != 2 or S.shape != (s, s):
        raise ValueError("input must be a square matrix")
    if s == 0:
        return True, 0.0
    S = 0.5 * (S + S.T)
    bound = float(np.abs(S).sum(axis=1).max())
    if bound == 0.0:
        return True, 0.0
    eye = np.eye(s)

    def strictly_pd(shift):
        try:
            np.linalg.cholesky(S - shift * eye)
            return True
        except np.linalg.LinAlgError:
            return False

    lo, hi = -bound, bound
    for _ in range(80):
        if hi - lo <= 1e-16 * max(1.0, bound):
            break
        mid = 0.5 * (lo + hi)
        if strictly_pd(mid):
            lo = mid
        else:
            hi = mid
    est = 0.5 * (lo + hi)
    return est >= -tol, est
