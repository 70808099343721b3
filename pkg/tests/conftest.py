import numpy as np
import pytest

from h2w.measure import AtomicMeasure, Interval, dyadic
from h2w.grid import build_grid


@pytest.fixture
def micro_pair():
    """One unit mass at 1/4 for sigma, one at 3/4 for w."""
    sigma = AtomicMeasure.from_triples([(1, 2, 1.0)])
    w = AtomicMeasure.from_triples([(3, 2, 1.0)])
    return sigma, w


@pytest.fixture
def two_atom_w():
    """Unit masses at 1/4 and 3/4 over one measure."""
    return AtomicMeasure.from_triples([(1, 2, 1.0), (3, 2, 1.0)])


@pytest.fixture
def unit_root():
    return Interval(dyadic(0), dyadic(1))


def unit_grid(sigma, w, depth):
    return build_grid(Interval(dyadic(0), dyadic(1)), depth, dyadic(0), sigma, w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
