import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mombat import pulsemodel, spectral
from mombat.pulsemodel import InsufficientSupport


def test_fourier_first_rows():
    phi = pulsemodel.build_basis("fourier", 4, 120).phi
    assert phi[0, 0] == 0 and phi[1, 0] == 1
    t = 2 * np.pi * np.arange(120) / 120
    np.testing.assert_allclose(phi[0], np.sin(t), atol=1e-12)
    np.testing.assert_allclose(phi[3], np.cos(2 * t), atol=1e-12)


def test_fourier_matches_oracle():
    np.testing.assert_allclose(pulsemodel.build_basis("fourier", 50, 119).phi,
                               oracles.fourier_basis(50, 119), atol=1e-12)


def test_fourier_gram_orthogonal():
    phi = pulsemodel.build_basis("fourier", 10, 120).phi
    g = phi @ phi.T
    off = g - np.diag(np.diag(g))
    assert np.max(np.abs(off)) < 1e-8 * np.min(np.diag(g))


@pytest.mark.parametrize("kind", ["fourier", "legendre", "polynomial"])
def test_basis_ranges(kind):
    phi = pulsemodel.build_basis(kind, 8, 100).phi
    assert phi.shape == (8, 100) and np.all(np.isfinite(phi))
    assert np.max(np.abs(phi)) <= 1 + 1e-12


def test_basis_rejects():
    with pytest.raises(ValueError):
        pulsemodel.build_basis("fourier", 10, 10)
    with pytest.raises(ValueError):
        pulsemodel.build_basis("fourier", 0, 10)
    with pytest.raises(ValueError):
        pulsemodel.build_basis("wavelet", 3, 10)


def test_exact_coefficients():
    b = pulsemodel.build_basis("fourier", 10, 120)
    x = 2 * b.phi[0] + 0.5 * b.phi[3]
    a = pulsemodel.fit_weighted(x, b, np.ones(120))
    expected = np.zeros(10)
    expected[[0, 3]] = [2, 0.5]
    np.testing.assert_allclose(a, expected, atol=1e-6)


def test_zero_weights_hide_spikes():
    rng = np.random.default_rng(0)
    n = 120
    t = np.arange(n) / 30
    clean = np.sin(2 * np.pi * 1.25 * t) + 0.3 * np.sin(2 * np.pi * 2.5 * t)
    bad = rng.choice(n, n // 5, replace=False)
    x, q = clean.copy(), np.ones(n)
    x[bad] += 10
    q[bad] = 0
    b = pulsemodel.build_basis("fourier", 20, n)
    rec = pulsemodel.reconstruct(pulsemodel.fit_weighted(x, b, q), b)
    assert np.max(np.abs(rec[bad] - clean[bad])) <= 1.0


def wls_deviation(rng) -> float:
    n = int(rng.integers(8, 40))
    alpha = int(rng.integers(1, n // 2))
    b = pulsemodel.build_basis("fourier", alpha, n)
    x = rng.normal(size=n)
    q = rng.uniform(0.1, 1, n)
    got = pulsemodel.fit_weighted(x, b, q)
    ref = oracles.wls(x, b.phi, q)
    return float(np.max(np.abs(got - ref)) / max(np.max(np.abs(ref)), 1e-12))


def test_fit_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        assert wls_deviation(rng) <= 1e-8


def test_near_complete_basis_reproduces():
    # odd length: with an even one the top sine row vanishes on the grid
    x = np.random.default_rng(2).normal(size=31)
    b = pulsemodel.build_basis("fourier", 30, 31)
    rec = pulsemodel.reconstruct(pulsemodel.fit_weighted(x - x.mean(), b, np.ones(31)), b)
    np.testing.assert_allclose(rec, x - x.mean(), atol=1e-6)


def test_reconstruct_examples():
    b = pulsemodel.build_basis("fourier", 5, 40)
    np.testing.assert_array_equal(pulsemodel.reconstruct(np.zeros(5), b), 0)
    np.testing.assert_allclose(pulsemodel.reconstruct([1, 0, 0, 0, 0], b),
                               np.sin(2 * np.pi * np.arange(40) / 40))
    with pytest.raises(ValueError):
        pulsemodel.reconstruct([1, 2], b)


@given(st.integers(0, 2**31))
def test_fit_residual_not_worse_than_zero(seed):
    rng = np.random.default_rng(seed)
    x, q = rng.normal(size=60), rng.uniform(0, 1, 60)
    b = pulsemodel.build_basis("fourier", 12, 60)
    r = x - pulsemodel.reconstruct(pulsemodel.fit_weighted(x, b, q), b)
    assert np.sum((q * r) ** 2) <= np.sum((q * x) ** 2) + 1e-12


@given(st.integers(0, 2**31))
def test_idempotent(seed):
    rng = np.random.default_rng(seed)
    x, q = rng.normal(size=60), rng.uniform(0.1, 1, 60)
    b = pulsemodel.build_basis("fourier", 12, 60)
    a = pulsemodel.fit_weighted(x, b, q)
    np.testing.assert_allclose(pulsemodel.fit_weighted(pulsemodel.reconstruct(a, b), b, q), a, atol=1e-8)


@given(st.integers(0, 2**31), st.floats(1.01, 10))
def test_raising_a_weight_never_hurts_that_sample(seed, factor):
    rng = np.random.default_rng(seed)
    x, q = rng.normal(size=40), rng.uniform(0.1, 1, 40)
    b = pulsemodel.build_basis("fourier", 10, 40)
    j = int(rng.integers(40))
    r0 = x[j] - oracles.wls(x, b.phi, q) @ b.phi[:, j]
    q2 = q.copy()
    q2[j] *= factor
    r1 = x[j] - oracles.wls(x, b.phi, q2) @ b.phi[:, j]
    r1_pkg = x[j] - pulsemodel.reconstruct(pulsemodel.fit_weighted(x, b, q2), b)[j]
    assert r1_pkg ** 2 <= r0 ** 2 + 1e-9
    assert r1_pkg == pytest.approx(r1, abs=1e-8)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.integers(50, 180), st.floats(0.6, 1.0))
def test_frequency_preserved(seed, bpm, keep):
    rng = np.random.default_rng(seed)
    n = 120
    x = np.sin(2 * np.pi * bpm / 60 * np.arange(n) / 30 + rng.uniform(0, 6))
    q = np.where(rng.random(n) < keep, 1.0, rng.uniform(0, 1, n))
    q[rng.choice(n, int(0.6 * n), replace=False)] = 1.0
    b = pulsemodel.build_basis("fourier", 50, n)
    rec = pulsemodel.reconstruct(pulsemodel.fit_weighted(x, b, q), b)
    assert abs(spectral.peak_hr(spectral.compute_spectrum(rec, 30))[1] - bpm) <= 1


def test_insufficient_support():
    b = pulsemodel.build_basis("fourier", 10, 40)
    q = np.zeros(40)
    q[:5] = 1
    with pytest.raises(InsufficientSupport, match="insufficient support"):
        pulsemodel.fit_weighted(np.ones(40), b, q)
    with pytest.raises(ValueError):
        pulsemodel.fit_weighted(np.ones(39), b, np.ones(40))
