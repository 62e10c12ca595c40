"""Shared fixtures: the two bundled reference systems and random generators."""

import random
from fractions import Fraction

import pytest

from siscert.model import DirectionSpec, SisModel


def infinite_2d_model() -> SisModel:
    """2-state plant, two infinite directions, one channel each way."""
    return SisModel.create(
        n0=2,
        directions=[
            DirectionSpec("infinite", 1, 1),
            DirectionSpec("infinite", 1, 1),
        ],
        A_TT=[["-0.5", "0"], ["0", "-1"]],
        A_TS=[["1", "0", "0", "2"], ["0", "0", "0.5", "0"]],
        A_ST=[["0", "0.5"], ["1", "0"], ["-0.5", "0"], ["0", "0"]],
        A_SS=[["0"] * 4 for _ in range(4)],
        name="infinite-2d",
    )


def mixed_periodic_model() -> SisModel:
    """2-state plant, infinite direction 1, period-3 direction 2."""
    return SisModel.create(
        n0=2,
        directions=[
            DirectionSpec("infinite", 1, 1),
            DirectionSpec("periodic", 1, 1, period=3),
        ],
        A_TT=[["-1", "0"], ["0", "-1"]],
        A_TS=[["1", "0", "0", "0"], ["0", "0", "-0.5", "0"]],
        A_ST=[["0", "0.5"], ["1", "0"], ["0.5", "0"], ["0", "0"]],
        A_SS=[["0"] * 4 for _ in range(4)],
        name="mixed-periodic-2d",
    )


@pytest.fixture
def infinite2d() -> SisModel:
    return infinite_2d_model()


@pytest.fixture
def mixed2d() -> SisModel:
    return mixed_periodic_model()


def _rand_frac(rng: random.Random, den: int = 8) -> Fraction:
    return Fraction(rng.randint(-den, den), den)


def random_model(
    rng: random.Random,
    n0: int = None,
    L: int = None,
    kinds=None,
    one_sided: bool = False,
    zero_ass: bool = False,
    diag_shift: Fraction = None,
    max_period: int = 4,
    den: int = 8,
) -> SisModel:
    """Random well-posed plant with entries in [-1, 1].

    one_sided restricts each direction to a single forward channel and
    zero_ass clears A_SS; both keep the symbolic pipeline's degrees (and
    the SDP sizes downstream) small.  diag_shift adds a negative multiple
    of I to A_TT to bias toward stable instances.
    """
    n0 = n0 if n0 is not None else rng.choice((1, 2))
    L = L if L is not None else rng.choice((1, 2))
    dirs = []
    for i in range(L):
        kind = kinds[i] if kinds else rng.choice(("infinite", "periodic"))
        period = rng.randint(1, max_period) if kind == "periodic" else None
        if one_sided:
            np_, nn = 1, 0
        else:
            np_, nn = rng.choice(((1, 1), (1, 0), (0, 1)))
        dirs.append(DirectionSpec(kind, np_, nn, period=period))
    n = sum(d.width for d in dirs)

    while True:
        def mat(r, c, scale=Fraction(1)):
            return [[_rand_frac(rng, den) * scale for _ in range(c)] for _ in range(r)]

        A_TT = mat(n0, n0)
        if diag_shift is not None:
            for i in range(n0):
                A_TT[i][i] = A_TT[i][i] - diag_shift
                # clamp back into [-1, 1]
                if A_TT[i][i] < -1:
                    A_TT[i][i] = Fraction(-1)
        A_TS = mat(n0, n)
        A_ST = mat(n, n0)
        A_SS = [[Fraction(0)] * n for _ in range(n)] if zero_ass else \
            mat(n, n, Fraction(1, 2))
        m = SisModel.create(n0, dirs, A_TT, A_TS, A_ST, A_SS)
        if m.wellposedness_scan(grid_density=12, tolerance=5e-2).ok:
            return m
