import numpy as np
import pytest


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_simplex(rng, n):
    return rng.dirichlet(np.ones(n))


def unmatched_weights(rng, h):
    """Random weights that are not inverted: larger weight on lower energy."""
    p = np.sort(rng.dirichlet(np.ones(len(h))))[::-1]
    return p[np.argsort(np.argsort(h, kind="stable"))]


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
