"""Randomized invariants of the closure and the thermodynamic bookkeeping."""

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qtd.contact import canonical_mean_energy, contact_temperature
from qtd.operators import HermitianOperator, eigendecompose
from qtd.propagators import build_irreversibility_map, exchange_rate, iso_rate
from qtd.state import DensityState, assemble_density, shannon_entropy
from qtd.thermo import entropy_production, force_I

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def energies(n_min=2, n_max=8):
    return st.integers(n_min, n_max).flatmap(lambda n: arrays(float, n, elements=finite))


@st.composite
def weights_for(draw, n):
    raw = draw(arrays(float, n, elements=st.floats(0.01, 1.0)))
    return raw / raw.sum()


@st.composite
def energy_and_weights(draw):
    h = draw(energies(3))
    return h, draw(weights_for(h.size))


@settings(max_examples=200, deadline=None)
@given(energy_and_weights(), st.floats(0.0, 10.0))
def test_production_non_negative(hp, beta):
    h, p = hp
    x = iso_rate(build_irreversibility_map(h, beta), force_I(p))
    assert entropy_production(x, force_I(p)) >= -1e-12 * max(1.0, beta)
    assert abs(x.sum()) <= 1e-12 * max(1.0, beta)
    assert abs(x @ h) <= 1e-10 * max(1.0, beta) * max(1.0, np.abs(h).max())


@settings(max_examples=200, deadline=None)
@given(energies(3), st.floats(-10, 10), st.integers(0, 2 ** 32 - 1))
def test_exchange_constraints(h, Q, seed):
    f = np.random.default_rng(seed).normal(size=h.size)
    hc, fc = h - h.mean(), f - f.mean()
    if np.linalg.norm(hc) < 1e-3:
        return
    u = fc / np.linalg.norm(fc)
    if np.linalg.norm(hc - (u @ hc) * u) < 1e-3 * np.linalg.norm(hc):
        return
    x = exchange_rate(f, h, Q).pdot_ex
    scale = max(1.0, abs(Q))
    assert abs(x.sum()) <= 1e-12 * scale * np.sqrt(h.size)
    assert abs(x @ h - Q) <= 1e-9 * scale
    assert abs(x @ f) <= 1e-9 * scale * np.linalg.norm(f)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6), st.floats(0.05, 50.0), st.integers(0, 2 ** 32 - 1))
def test_theta_inverts_canonical_energy(n, T, seed):
    h = np.sort(np.random.default_rng(seed).uniform(0, 1, n))
    if np.ptp(h) < 1e-2:
        return
    E = canonical_mean_energy(h, T)
    w = np.exp(-(h - h.min()) / T)
    p = w / w.sum()
    assert abs(p @ h - E) < 1e-12
    assert contact_temperature(h, p).Theta == np.float64(T) or \
        abs(contact_temperature(h, p).Theta - T) <= 1e-9 * T


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_density_is_a_state(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    _, basis = eigendecompose(HermitianOperator(a + a.conj().T))
    p = rng.dirichlet(np.ones(n))
    rho = assemble_density(DensityState(basis, p)).matrix
    assert abs(np.trace(rho) - 1) < 1e-12
    ev = np.linalg.eigvalsh(rho)
    assert np.allclose(np.sort(ev), np.sort(p), atol=1e-12)
    assert 0 <= shannon_entropy(p) <= np.log(n) + 1e-12
