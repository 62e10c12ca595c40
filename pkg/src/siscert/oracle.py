"""Independent ground-truth machinery for interconnected-system stability.

Everything here is deliberately decoupled from the certification pipeline:
Hurwitz testing goes through the Lyapunov equation (a dense linear solve
plus a positive-definiteness check, never an eigensolver), spectral
abscissas come from bisection on a stability test, frequency sampling
evaluates the interconnection symbol pointwise, and the lifted ring
simulator integrates the finite closure of the interconnection in the
time domain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import sdpsolver
from ._kernels import abscissa_batch
from .model import INFINITE, PERIODIC, ModelError, SisModel

# Above this size the n^2 x n^2 dense Lyapunov system of the bisection
# test becomes unreasonable; the matrix-sign eigenvalue counter (also
# eigensolver-free) takes over.
LYAPUNOV_SIZE_LIMIT = 32


# ---------------------------------------------------------------------------
# Hurwitz test and spectral abscissa
# ---------------------------------------------------------------------------


def hurwitz_lyapunov(M: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff every eigenvalue of M has strictly negative real part.

    Solves M* P + P M = -I as a dense linear system in the entries of P
    (row-major vectorization).  A True answer is self-certifying: with the
    Hermitized solution P, the residual E = M* P + P M + I is required to
    satisfy n * max|E_ij| < 1/4, which bounds its spectral norm below 1,
    so M* P + P M = -(I - E) is negative definite; together with P
    strictly positive definite that proves Hurwitz no matter how badly
    conditioned the solve was.  Any failure along the way (singular
    system, garbage solution, indefinite P) means not Hurwitz -- an
    exactly marginal M makes the Lyapunov operator singular, so garbage
    solutions there can never sneak past the residual bound.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    n = M.shape[0]
    if n == 0:
        return True
    if not np.all(np.isfinite(M.real)) or not np.all(np.isfinite(M.imag)):
        raise ValueError("matrix entries must be finite")

    eye = np.eye(n, dtype=np.complex128)
    MH = M.conj().T
    S = np.kron(MH, eye) + np.kron(eye, M.T)
    rhs = -eye.reshape(-1)
    try:
        p = np.linalg.solve(S, rhs)
    except np.linalg.LinAlgError:
        return False
    P = 0.5 * (p.reshape(n, n) + p.reshape(n, n).conj().T)
    if not np.all(np.isfinite(P.real)) or not np.all(np.isfinite(P.imag)):
        return False
    residual = np.abs(MH @ P + P @ M + eye).max()
    if not (residual < 0.25 / n):
        return False
    ok, est = sdpsolver.psd_check(P, tol=0.0)
    return bool(est > tol)


def _sign_count_right_of(M: np.ndarray, shift: float) -> int:
    """Number of eigenvalues with real part > shift, by the matrix sign
    function (scaled Newton inversion).  Raises LinAlgError when the
    iteration cannot separate the spectrum (eigenvalue on the line)."""
    n = M.shape[0]
    S = M - shift * np.eye(n, dtype=np.complex128)
    for _ in range(100):
        Sinv = np.linalg.inv(S)
        ns = np.linalg.norm(S, "fro")
        ni = np.linalg.norm(Sinv, "fro")
        if not (np.isfinite(ns) and np.isfinite(ni)) or ns == 0.0:
            raise np.linalg.LinAlgError("sign iteration lost finiteness")
        mu = math.sqrt(ni / ns)
        S_next = 0.5 * (mu * S + Sinv / mu)
        if np.linalg.norm(S_next - S, "fro") <= 1e-13 * np.linalg.norm(S, "fro"):
            S = S_next
            break
        S = S_next
    else:
        raise np.linalg.LinAlgError("sign iteration did not converge")
    count = 0.5 * (n + np.trace(S).real)
    rounded = int(round(count))
    if abs(count - rounded) > 0.1 or rounded < 0 or rounded > n:
        raise np.linalg.LinAlgError("sign iteration gave a non-integer count")
    return rounded


def _abscissa_by_counting(M: np.ndarray, tol: float) -> float:
    bound = float(np.abs(M).sum(axis=1).max()) + 1.0
    lo, hi = -bound, bound
    steps = max(1, int(math.ceil(math.log2(2.0 * bound / tol))))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        count = None
        for nudge in (0.0, 1e-7, -1e-7, 3e-7):
            try:
                count = _sign_count_right_of(M, mid + nudge * bound)
                break
            except np.linalg.LinAlgError:
                continue
        if count is None:
            # the line keeps hitting spectrum; treat as not-separated and
            # shrink from above to stay conservative
            hi = mid
            continue
        if count > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spectral_abscissa(M: np.ndarray, tol: float = 1e-8) -> float:
    """max Re lambda(M) within tol, without any eigensolver.

    Small matrices use bisection over the Lyapunov-based Hurwitz test;
    past LYAPUNOV_SIZE_LIMIT the dense n^2 x n^2 Lyapunov system is too
    large, so a matrix-sign eigenvalue counter drives the bisection
    instead.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if M.shape[0] == 0:
        return -math.inf
    if not np.all(np.isfinite(M.real)) or not np.all(np.isfinite(M.imag)):
        raise ValueError("matrix entries must be finite")
    if M.shape[0] <= LYAPUNOV_SIZE_LIMIT:
        return float(abscissa_batch(M, tol)[0])
    return float(_abscissa_by_counting(M, tol))


# ---------------------------------------------------------------------------
# frequency-domain sampling of the interconnection symbol
# ---------------------------------------------------------------------------


def _direction_grid(spec, count: int) -> np.ndarray:
    """Sample points for one direction: exact roots of unity for periodic
    directions (their count is fixed by the period), uniform otherwise."""
    if spec.kind == PERIODIC:
        count = spec.period
    if count < 1:
        raise ValueError("grid count must be >= 1")
    return np.exp(2j * np.pi * np.arange(count) / count)


def freq_sample_abscissa(
    model: SisModel,
    grid: Sequence[int],
    tol: float = 1e-8,
) -> Tuple[float, Tuple[complex, ...]]:
    """Largest spectral abscissa of A(z) over a frequency grid.

    Periodic directions are sampled exactly at their roots of unity
    (the requested count for those directions is ignored); infinite
    directions use uniform circle grids of the requested size.  A
    negative maximum is necessary evidence of stability; it is sufficient
    only when every direction is periodic.
    """
    model.require_supported()
    if len(grid) != model.L:
        raise ValueError(f"expected {model.L} grid counts")
    axes = [_direction_grid(spec, int(c))
            for spec, c in zip(model.directions, grid)]
    points = list(product(*[list(g) for g in axes]))
    mats = np.stack([model.eval_A(z) for z in points])
    values = abscissa_batch(mats, tol)
    best = int(np.argmax(values))
    return float(values[best]), tuple(complex(v) for v in points[best])


# ---------------------------------------------------------------------------
# lifted finite closure (rings) and simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiftedSystem:
    """Finite closure of the interconnection on a ring/torus of sites."""

    grid: Tuple[int, ...]
    Abig: np.ndarray
    site_index: Dict[Tuple[int, ...], int]
    n0: int


def _shift_matrix(R: int) -> np.ndarray:
    """Circulant forward shift: (C w)[k] = w[k+1 mod R]."""
    C = np.zeros((R, R))
    for k in range(R):
        C[k, (k + 1) % R] = 1.0
    return C


def lift_finite_system(model: SisModel, sites: Sequence[int]) -> LiftedSystem:
    """Close the interconnection over a finite site torus.

    Periodic directions must use exactly their period as the site count;
    infinite directions may use any ring size >= 1 (the ring samples the
    symbol exactly at roots of unity, avoiding boundary artifacts).  The
    lifted generator is

        Abig = I (x) A_TT + (I (x) A_TS) (Delta_big - I (x) A_SS)^{-1} (I (x) A_ST)

    with Delta_big assembled from per-direction circulant shifts.
    """
    model.require_supported()
    sites = [int(s) for s in sites]
    if len(sites) != model.L:
        raise ModelError(f"expected {model.L} site counts")
    for i, (spec, R) in enumerate(zip(model.directions, sites)):
        if R < 1:
            raise ModelError("site counts must be >= 1")
        if spec.kind == PERIODIC and R != spec.period:
            raise ModelError(
                f"direction {i + 1} is periodic with period {spec.period}; "
                f"the site count must equal it (got {R})")

    att, ats, ast, ass = model.numeric_blocks()
    n0, n = model.n0, model.n
    S = int(np.prod(sites))
    shifts = [_shift_matrix(R) for R in sites]

    def site_op(direction: int, sign: int) -> np.ndarray:
        op = np.ones((1, 1))
        for i, R in enumerate(sites):
            if i == direction:
                f = shifts[i] if sign > 0 else shifts[i].T
            else:
                f = np.eye(R)
            op = np.kron(op, f)
        return op

    delta_big = np.zeros((S * n, S * n), dtype=att.dtype)
    col = 0
    for direction, sign, width in model.channel_layout():
        mask = np.zeros((n, n))
        mask[col:col + width, col:col + width] = np.eye(width)
        delta_big += np.kron(site_op(direction, sign), mask)
        col += width

    eye_s = np.eye(S)
    D = delta_big - np.kron(eye_s, ass)
    try:
        inner = np.linalg.solve(D, np.kron(eye_s, ast))
    except np.linalg.LinAlgError as exc:
        raise ModelError(
            f"lifted interconnection is ill-posed at sites {tuple(sites)}: "
            "Delta_big - A_SS is singular") from exc
    Abig = np.kron(eye_s, att) + np.kron(eye_s, ats) @ inner
    if np.iscomplexobj(Abig):
        if np.abs(Abig.imag).max() < 1e-12 * (1.0 + np.abs(Abig.real).max()):
            Abig = Abig.real.copy()

    site_index = {
        idx: pos * n0
        for pos, idx in enumerate(product(*[range(R) for R in sites]))
    }
    return LiftedSystem(grid=tuple(sites), Abig=Abig,
                        site_index=site_index, n0=n0)


def initial_state(ls: LiftedSystem,
                  triples: Sequence[Tuple[Sequence[int], int, float]]
                  ) -> np.ndarray:
    """State vector from (site, state-index, value) triples."""
    x0 = np.zeros(ls.Abig.shape[0])
    for site, comp, value in triples:
        site = tuple(int(k) for k in site)
        if site not in ls.site_index:
            raise ValueError(f"site {site} outside the grid {ls.grid}")
        comp = int(comp)
        if not 0 <= comp < ls.n0:
            raise ValueError(f"state index {comp} outside 0..{ls.n0 - 1}")
        x0[ls.site_index[site] + comp] = float(value)
    return x0


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the lifted dynamics; norms match the states."""

    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray

    def at(self, t: float) -> np.ndarray:
        """State at the recorded time nearest t (must be a grid hit)."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 + 1e-9 * abs(t):
            raise ValueError(f"time {t} was not recorded")
        return self.states[i]


def simulate(
    ls: LiftedSystem,
    x0: np.ndarray,
    t_end: float = 20.0,
    dt: float = 1e-3,
    record_dt: float = 0.01,
) -> Trajectory:
    """Fixed-step 4th-order integration of xdot = Abig x.

    For a linear autonomous system the classical RK4 step is exactly the
    degree-4 Taylor map Phi = I + h A + ... + h^4 A^4 / 24; Phi is built
    once and applied in record-stride blocks, which reproduces the
    stepped sequence at the recorded times (up to float reassociation)
    at a fraction of the cost.  Blowup past 1e12 raises with the time.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    A = ls.Abig
    x0 = np.asarray(x0, dtype=A.dtype).reshape(-1)
    if x0.shape[0] != A.shape[0]:
        raise ValueError(
            f"state has {x0.shape[0]} entries; system needs {A.shape[0]}")

    stride = max(1, int(round(record_dt / dt)))
    n_steps = int(round(t_end / dt))
    n_records = n_steps // stride

    hA = dt * A
    phi = np.eye(A.shape[0], dtype=A.dtype)
    term = np.eye(A.shape[0], dtype=A.dtype)
    for k in range(1, 5):
        term = term @ hA / k
        phi = phi + term
    phi_stride = np.linalg.matrix_power(phi, stride)

    times = [0.0]
    states = [x0.copy()]
    x = x0.copy()
    for r in range(1, n_records + 1):
        x = phi_stride @ x
        t = r * stride * dt
        nrm = float(np.linalg.norm(x))
        if not np.isfinite(nrm) or nrm > 1e12:
            raise ArithmeticError(
                f"trajectory norm exceeded 1e12 at t = {t:.6g} s")
        times.append(t)
        states.append(x.copy())
    states = np.array(states)
    return Trajectory(
        times=np.array(times),
        states=states,
        norms=np.linalg.norm(states, axis=1),
    )


def decay_fit(times: np.ndarray, norms: np.ndarray) -> Tuple[float, float]:
    """Least-squares fit log ||x(t)|| ~ log(alpha) - beta t.

    Returns (alpha, beta); beta > 0 means the fitted envelope decays.
    Zero norms are excluded (log); needs at least two usable samples.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    keep = norms > 0.0
    if keep.sum() < 2:
        raise ValueError("need at least two nonzero norms to fit")
    slope, intercept = np.polyfit(times[keep], np.log(norms[keep]), 1)
    return float(math.exp(intercept)), float(-slope)


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def _site_labels(ls: LiftedSystem) -> List[str]:
    labels = []
    for site, offset in sorted(ls.site_index.items(), key=lambda kv: kv[1]):
        tag = "_".join(str(k) for k in site)
        labels.extend(f"x_{tag}_c{c}" for c in range(ls.n0))
    return labels


def write_trajectory_csv(ls: LiftedSystem, traj: Trajectory, path) -> None:
    """Full trajectory dump: time, norm, then one column per site/state."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "norm"] + _site_labels(ls))
        for t, nrm, row in zip(traj.times, traj.norms, traj.states):
            w.writerow([f"{t:.6f}", repr(float(nrm))]
                       + [repr(float(v)) for v in row])


def write_snapshot_csv(ls: LiftedSystem, traj: Trajectory, t: float,
                       path) -> None:
    """Spatial field at one recorded time: site indices then components."""
    state = traj.at(t)
    L = len(ls.grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"k{i + 1}" for i in range(L)]
                   + [f"c{c}" for c in range(ls.n0)])
        for site, offset in sorted(ls.site_index.items(), key=lambda kv: kv[1]):
            vals = state[offset:offset + ls.n0]
            w.writerow(list(site) + [repr(float(v)) for v in vals])
