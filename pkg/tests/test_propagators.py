import numpy as np
import pytest

from qtd.errors import ConstitutiveViolation, DegenerateSystem, InfeasibleExchange
from qtd.propagators import (PropagatorSplit, build_irreversibility_map,
                             custom_irreversibility_map, exchange_rate, iso_rate, isolate)
from qtd.thermo import entropy_production, force_I


def gram_schmidt_complement(vectors, n):
    """Oracle: projector onto the orthogonal complement, via classical Gram-Schmidt."""
    q = []
    for v in vectors:
        w = np.array(v, float)
        for u in q:
            w = w - (u @ w) * u
        if np.linalg.norm(w) > 1e-9:
            q.append(w / np.linalg.norm(w))
    P = np.eye(n)
    for u in q:
        P = P - np.outer(u, u)
    return P


def test_two_levels_do_not_dissipate():
    B = build_irreversibility_map([0.0, 1.0], 3.0).B
    assert np.allclose(B, 0)


def test_three_level_map():
    v = np.array([1, -2, 1]) / np.sqrt(6)
    m = build_irreversibility_map([0.0, 1.0, 2.0], 2.0)
    assert np.allclose(m.B, -2.0 * np.outer(v, v), atol=1e-14)
    assert m.violations([0, 1, 2]) == []


def test_degenerate_energies():
    n = 4
    m = build_irreversibility_map(np.full(n, 0.7), 1.5)
    assert np.allclose(m.B, -1.5 * (np.eye(n) - np.ones((n, n)) / n), atol=1e-14)


def test_against_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        h = rng.normal(size=n)
        beta = rng.uniform(0.1, 10)
        B = build_irreversibility_map(h, beta).B
        assert np.allclose(B, -beta * gram_schmidt_complement([np.ones(n), h], n), atol=1e-12)


def test_one_level_rejected():
    with pytest.raises(DegenerateSystem):
        build_irreversibility_map([1.0], 1.0)


def test_iso_rate_examples():
    m = build_irreversibility_map([0.0, 1.0, 2.0], 1.0)
    assert np.allclose(iso_rate(m, np.zeros(3)), 0)
    assert np.allclose(iso_rate(m, np.ones(3)), 0, atol=1e-15)
    fI = force_I([0.5, 0.3, 0.2], 3)
    v = np.array([1, -2, 1]) / np.sqrt(6)
    assert np.allclose(iso_rate(m, fI), -0.04301325039969882 * v, atol=1e-14)


def test_custom_map_validation():
    v = np.array([1, -2, 1]) / np.sqrt(6)
    ok = custom_irreversibility_map(-0.5 * np.outer(v, v), [0, 1, 2])
    assert ok.beta == pytest.approx(0.5)
    with pytest.raises(ConstitutiveViolation, match="negative-semidefinite"):
        custom_irreversibility_map(np.outer(v, v), [0, 1, 2])
    with pytest.raises(ConstitutiveViolation, match="kernel-contains-h"):
        custom_irreversibility_map(-np.eye(3) + np.ones((3, 3)) / 3, [0, 1, 2])
    with pytest.raises(ConstitutiveViolation, match="symmetric"):
        custom_irreversibility_map(np.array([[0.0, 1.0], [0.0, 0.0]]))


def minimum_norm_oracle(f, h, Q):
    C = np.vstack([np.ones_like(h), f, h])
    x, *_ = np.linalg.lstsq(C, np.array([0.0, 0.0, Q]), rcond=None)
    return x


def test_exchange_zero_flux():
    ex = exchange_rate([0.2, -0.1, 0.4], [0, 1, 2], 0.0)
    assert np.all(ex.pdot_ex == 0) and np.all(ex.A == 0)


def test_exchange_two_level():
    Q = 0.07
    ex = exchange_rate([0.3, 0.3], [0.0, 1.0], Q)
    assert np.allclose(ex.pdot_ex, [-Q, Q])


def test_exchange_against_lstsq(rng):
    for _ in range(50):
        n = int(rng.integers(3, 9))
        f, h = rng.normal(size=n), rng.normal(size=n)
        Q = rng.normal()
        ex = exchange_rate(f, h, Q)
        assert np.allclose(ex.pdot_ex, minimum_norm_oracle(f, h, Q), atol=1e-10)
        A = ex.A
        assert np.allclose(A, -A.T, atol=1e-12)
        assert np.allclose(A @ f, ex.pdot_ex, atol=1e-10)
        assert abs(ex.pdot_ex @ f) < 1e-10
        assert ex.pdot_ex @ h == pytest.approx(Q, abs=1e-10)
        assert abs(ex.pdot_ex.sum()) < 1e-12


def test_exchange_homogeneity(rng):
    f, h = rng.normal(size=5), rng.normal(size=5)
    x1 = exchange_rate(f, h, 0.3).pdot_ex
    assert np.allclose(exchange_rate(f, h, 0.6).pdot_ex, 2 * x1, atol=1e-14)
    assert np.allclose(exchange_rate(-2.5 * f, h, 0.3).pdot_ex, x1, atol=1e-13)


def test_exchange_infeasible():
    h = np.array([0.0, 1.0, 2.0])
    with pytest.raises(InfeasibleExchange):
        exchange_rate(0.4 + 2.0 * h, h, 0.1)


def test_exchange_without_f():
    ex = exchange_rate(np.zeros(3), [0.0, 1.0, 2.0], 0.2)
    assert ex.A is None
    assert ex.pdot_ex @ np.array([0.0, 1.0, 2.0]) == pytest.approx(0.2)


def test_isolate():
    x, y = np.array([0.1, -0.1]), np.array([-0.2, 0.2])
    out = isolate(PropagatorSplit(x, y))
    assert np.array_equal(out.pdot_iso, x) and np.array_equal(out.pdot_ex, [0, 0])
    again = isolate(out)
    assert np.array_equal(again.pdot_iso, x) and np.array_equal(again.pdot_ex, [0, 0])


def test_isolation_leaves_production(rng):
    h = rng.normal(size=4)
    fI = rng.normal(size=4)
    split = PropagatorSplit(iso_rate(build_irreversibility_map(h, 1.0), fI),
                            exchange_rate(fI + h, h, 0.2).pdot_ex)
    s0 = entropy_production(split.pdot_iso, fI)
    assert entropy_production(isolate(split).pdot_iso, fI) == s0
