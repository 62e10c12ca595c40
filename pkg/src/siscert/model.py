"""System data for spatially interconnected plants.

A plant couples a temporal state of width n0 to its neighbours along L
spatial directions.  Direction i carries a forward channel of width n_pos
and a backward channel of width n_neg; the stacked interconnection vector
is ordered (v_1; v_-1; v_2; v_-2; ...).  Eliminating the interconnection
variables gives the spatial-frequency symbol

    A(z) = A_TT + A_TS (Delta(z) - A_SS)^{-1} A_ST,

a rational matrix function on the unit multicircle, which this module also
exposes in exact fraction form A(z) = H(z) / h(z).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .matpoly import MatTrigPoly
from .trigpoly import QC, TrigPoly, _as_qc

INFINITE = "infinite"
PERIODIC = "periodic"
FINITE = "finite"


class ModelError(ValueError):
    """Malformed or unsupported system description."""


def _decimal_frac(x) -> Fraction:
    # floats arrive from TOML as binary doubles; read them back through
    # repr so "0.1" means a tenth, not its binary neighbour
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _qc_entry(x) -> QC:
    if isinstance(x, QC):
        return x
    if isinstance(x, float):
        return QC(_decimal_frac(x))
    return _as_qc(x)


def _rational_matrix(rows, shape, what) -> Tuple[Tuple[QC, ...], ...]:
    try:
        mat = tuple(tuple(_qc_entry(x) for x in row) for row in rows)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{what}: bad entry ({exc})") from exc
    if len(mat) != shape[0] or any(len(r) != shape[1] for r in mat):
        raise ModelError(
            f"{what}: expected shape {shape[0]}x{shape[1]}, "
            f"got {len(mat)}x{len(mat[0]) if mat else 0}"
        )
    return mat


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary-condition matrix of a finite-extent direction (reserved).

    Carried for completeness; the analysis itself only accepts infinite and
    periodic directions, and asks the user to supply the equivalent
    periodic embedding of any finite-extent direction.
    """

    matrix: Tuple[Tuple[QC, ...], ...]

    def __post_init__(self):
        k = len(self.matrix)
        if k == 0 or any(len(r) != k for r in self.matrix):
            raise ModelError("boundary matrix must be square and nonempty")
        poly = MatTrigPoly.constant(1, self.matrix)
        if poly.det().is_zero():
            raise ModelError("boundary matrix must be nonsingular")


@dataclass(frozen=True)
class DirectionSpec:
    """One spatial direction: interconnection kind and channel widths."""

    kind: str
    n_pos: int
    n_neg: int
    period: Optional[int] = None
    boundary: Optional[BoundarySpec] = None

    def __post_init__(self):
        if self.kind not in (INFINITE, PERIODIC, FINITE):
            raise ModelError(f"unknown direction kind {self.kind!r}")
        if self.n_pos < 0 or self.n_neg < 0 or self.n_pos + self.n_neg < 1:
            raise ModelError("each direction needs >= 1 channel in total")
        if self.kind == PERIODIC:
            if self.period is None or self.period < 1:
                raise ModelError("periodic direction needs period >= 1")
        elif self.period is not None:
            raise ModelError("period only makes sense for periodic directions")
        if self.kind == FINITE and self.boundary is None:
            raise ModelError("finite direction needs a boundary matrix")

    @property
    def width(self) -> int:
        return self.n_pos + self.n_neg


@dataclass(frozen=True)
class WellPosednessReport:
    min_abs_h: float
    argmin: Tuple[complex, ...]
    grid_density: int
    tolerance: float
    ok: bool
    note: str = "sampled necessary check; passing does not prove well-posedness"


@dataclass(frozen=True)
class SisModel:
    """Immutable plant description with exact-rational system matrices."""

    n0: int
    directions: Tuple[DirectionSpec, ...]
    A_TT: Tuple[Tuple[QC, ...], ...]
    A_TS: Tuple[Tuple[QC, ...], ...]
    A_ST: Tuple[Tuple[QC, ...], ...]
    A_SS: Tuple[Tuple[QC, ...], ...]
    name: str = "unnamed"

    @classmethod
    def create(cls, n0, directions, A_TT, A_TS, A_ST, A_SS, name="unnamed"):
        dirs = tuple(directions)
        if n0 < 1:
            raise ModelError("n0 must be >= 1")
        if not dirs:
            raise ModelError("at least one spatial direction is required")
        n = sum(d.width for d in dirs)
        return cls(
            n0=n0,
            directions=dirs,
            A_TT=_rational_matrix(A_TT, (n0, n0), "A_TT"),
            A_TS=_rational_matrix(A_TS, (n0, n), "A_TS"),
            A_ST=_rational_matrix(A_ST, (n, n0), "A_ST"),
            A_SS=_rational_matrix(A_SS, (n, n), "A_SS"),
            name=name,
        )

    # -- structure ---------------------------------------------------------

    @property
    def L(self) -> int:
        return len(self.directions)

    @property
    def n(self) -> int:
        return sum(d.width for d in self.directions)

    def channel_layout(self) -> List[Tuple[int, int, int]]:
        """(direction index, shift exponent +1/-1, width) per channel block."""
        out = []
        for i, d in enumerate(self.directions):
            if d.n_pos:
                out.append((i, +1, d.n_pos))
            if d.n_neg:
                out.append((i, -1, d.n_neg))
        return out

    def kinds(self) -> Tuple[str, ...]:
        return tuple(d.kind for d in self.directions)

    def require_supported(self):
        if any(d.kind == FINITE for d in self.directions):
            raise ModelError(
                "finite-extent directions are not analyzed directly; supply "
                "the equivalent periodic embedding"
            )

    def reorder_directions(self, order: Sequence[int]) -> "SisModel":
        """Permute directions (and the matching channel blocks of the
        interconnection matrices)."""
        if sorted(order) != list(range(self.L)):
            raise ModelError(f"bad permutation {order}")
        starts = []
        pos = 0
        for d in self.directions:
            starts.append(pos)
            pos += d.width
        idx: List[int] = []
        for i in order:
            idx.extend(range(starts[i], starts[i] + self.directions[i].width))
        A_TS = tuple(tuple(row[j] for j in idx) for row in self.A_TS)
        A_ST = tuple(self.A_ST[j] for j in idx)
        A_SS = tuple(tuple(self.A_SS[j][k] for k in idx) for j in idx)
        return SisModel(
            n0=self.n0,
            directions=tuple(self.directions[i] for i in order),
            A_TT=self.A_TT,
            A_TS=A_TS,
            A_ST=A_ST,
            A_SS=A_SS,
            name=self.name,
        )

    def infinite_first(self) -> Tuple["SisModel", List[int]]:
        """Reorder so all infinite directions precede periodic ones."""
        order = [i for i, d in enumerate(self.directions) if d.kind == INFINITE]
        order += [i for i, d in enumerate(self.directions) if d.kind != INFINITE]
        return self.reorder_directions(order), order

    # -- symbolic pipeline ---------------------------------------------------

    def delta(self) -> MatTrigPoly:
        """Block-diagonal shift symbol diag(z_i I_{n_pos}, z_i^-1 I_{n_neg})."""
        L = self.L
        blocks: List[TrigPoly] = []
        for i, sign, width in self.channel_layout():
            d = tuple(sign if k == i else 0 for k in range(L))
            blocks.extend([TrigPoly.monomial(L, d)] * width)
        return MatTrigPoly.diag(blocks)

    def _mat(self, rows) -> MatTrigPoly:
        return MatTrigPoly.constant(self.L, rows)

    def symbol_num_den(self) -> Tuple[TrigPoly, MatTrigPoly]:
        """Exact fraction form of the symbol: (h, H) with A(z) = H/h.

        h = det(Delta - A_SS); H = A_TT h + A_TS adj(Delta - A_SS) A_ST.
        """
        dmat = self.delta() - self._mat(self.A_SS)
        h = dmat.det()
        att = self._mat(self.A_TT)
        ats = self._mat(self.A_TS)
        ast = self._mat(self.A_ST)
        H = att.scale(h) + (ats @ dmat.adjugate() @ ast)
        return h, H

    # -- numeric views ----------------------------------------------------------

    def _np(self, rows) -> np.ndarray:
        if len(rows) == 0:
            return np.zeros((0, 0), dtype=complex)
        return np.array([[complex(x) for x in row] for row in rows], dtype=complex)

    def numeric_blocks(self):
        return (
            self._np(self.A_TT), self._np(self.A_TS),
            self._np(self.A_ST), self._np(self.A_SS),
        )

    def delta_diag_exponents(self) -> np.ndarray:
        """Per-channel (direction, exponent) pairs expanded to the n diagonal
        slots of Delta(z)."""
        out = []
        for i, sign, width in self.channel_layout():
            out.extend([(i, sign)] * width)
        return np.array(out, dtype=int)

    def eval_A(self, z: Sequence[complex]) -> np.ndarray:
        """Numeric symbol A(z) at one point of the multicircle."""
        att, ats, ast, ass = self.numeric_blocks()
        slots = self.delta_diag_exponents()
        zv = np.asarray([complex(v) for v in z])
        diag = zv[slots[:, 0]] ** slots[:, 1]
        m = np.diag(diag) - ass
        try:
            inner = np.linalg.solve(m, ast)
        except np.linalg.LinAlgError as exc:
            raise ModelError(f"Delta(z) - A_SS singular at z = {list(z)}") from exc
        return att + ats @ inner

    def A_at_one(self) -> np.ndarray:
        """The constant matrix A(1_L); its Hurwitzness is necessary for
        stability of infinite interconnections."""
        return self.eval_A([1.0] * self.L)

    def wellposedness_scan(self, grid_density: int = 16,
                           tolerance: float = 1e-8) -> WellPosednessReport:
        """min |h(z)| over a uniform grid; a sampled necessary check only."""
        from .grids import argmin_point, circle_grid, eval_on_grid

        if grid_density < 1:
            raise ModelError("grid_density must be >= 1")
        h = self._h_only()
        grids = [circle_grid(grid_density) for _ in range(self.L)]
        vals = np.abs(eval_on_grid(h, grids))
        idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
        argmin = tuple(complex(g[i]) for g, i in zip(grids, idx))
        mn = float(vals[idx])
        return WellPosednessReport(
            min_abs_h=mn,
            argmin=argmin,
            grid_density=grid_density,
            tolerance=tolerance,
            ok=bool(mn >= tolerance),
        )

    def _h_only(self) -> TrigPoly:
        return (self.delta() - self._mat(self.A_SS)).det()

    # -- parsing -------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "SisModel":
        """Build from the TOML-shaped dict (see the bundled model files)."""
        try:
            sys_tbl = data["system"]
            n0 = int(sys_tbl["n0"])
            dir_tbls = data["direction"]
            mats = data["matrices"]
        except KeyError as exc:
            raise ModelError(f"missing section or key: {exc}") from exc
        if isinstance(dir_tbls, dict):
            dir_tbls = [dir_tbls]
        dirs = []
        for t in dir_tbls:
            kind = t.get("kind", INFINITE)
            boundary = None
            if "boundary" in t:
                boundary = BoundarySpec(
                    _rational_matrix(
                        t["boundary"],
                        (len(t["boundary"]), len(t["boundary"])),
                        "boundary",
                    )
                )
            dirs.append(DirectionSpec(
                kind=kind,
                n_pos=int(t.get("n_pos", 0)),
                n_neg=int(t.get("n_neg", 0)),
                period=int(t["period"]) if "period" in t else None,
                boundary=boundary,
            ))
        def grab(key):
            if key not in mats:
                raise ModelError(f"missing matrix {key}")
            return mats[key]
        return cls.create(
            n0=n0,
            directions=dirs,
            A_TT=grab("A_TT"),
            A_TS=grab("A_TS"),
            A_ST=grab("A_ST"),
            A_SS=grab("A_SS"),
            name=str(sys_tbl.get("name", "unnamed")),
        )
