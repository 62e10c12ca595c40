"""Uniform torus grids and vectorized polynomial evaluation on them."""

from __future__ import annotations

from itertools import product
from typing import List, Sequence

import numpy as np

from .trigpoly import TrigPoly


def circle_grid(count: int) -> np.ndarray:
    """count equally spaced points on the unit circle, starting at 1."""
    if count < 1:
        raise ValueError("grid count must be >= 1")
    return np.exp(2j * np.pi * np.arange(count) / count)


def roots_of_unity(n: int) -> np.ndarray:
    return circle_grid(n)


def eval_on_grid(p: TrigPoly, grids: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate p on the Cartesian product of per-variable circle grids.

    Returns an array of shape (len(grids[0]), ..., len(grids[L-1])).
    """
    if len(grids) != p.L:
        raise ValueError(f"expected {p.L} grids, got {len(grids)}")
    shape = tuple(len(g) for g in grids)
    out = np.zeros(shape, dtype=complex)
    naxes = len(grids)
    for d, c in p.terms():
        term = np.full(shape, complex(c))
        for axis, (g, e) in enumerate(zip(grids, d)):
            if e:
                view = [1] * naxes
                view[axis] = -1
                term = term * (np.asarray(g, dtype=complex) ** e).reshape(view)
        out += term
    return out


def grid_points(grids: Sequence[np.ndarray]) -> List[tuple]:
    """All grid tuples in the same C-order as eval_on_grid's output."""
    return [tuple(zs) for zs in product(*[list(g) for g in grids])]


def argmin_point(values: np.ndarray, grids: Sequence[np.ndarray]) -> tuple:
    """Grid tuple at which (the real part of) values is minimal."""
    idx = np.unravel_index(int(np.argmin(values.real)), values.shape)
    return tuple(complex(g[i]) for g, i in zip(grids, idx))
