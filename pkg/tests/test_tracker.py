import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from mombat import spectral, tracker
from mombat.spectral import Spectrum
from mombat.tracker import PriorState

GRID = spectral.hr_grid(0.7, 4.0, 1.0)
C, C_HAT = 4.0, 0.4


def _peaked(*peaks):
    m = np.full(GRID.size, 1e-3)
    for f, a in peaks:
        m[int(np.argmin(np.abs(GRID - f)))] = a
    return Spectrum(GRID, m)


def test_uninitialized_prior_is_uniform():
    np.testing.assert_allclose(tracker.prior_density(PriorState(), GRID), 1 / GRID.size)


def test_zero_gamma_is_uninformative():
    np.testing.assert_allclose(tracker.prior_density(PriorState(1.5, 0.0, True), GRID), 1 / GRID.size)


def test_prior_sharp_gaussian():
    # h = 1.5 Hz with c/gamma = 0.05
    p = tracker.prior_density(PriorState(1.5, C / 0.05, True), GRID, C, C_HAT)
    j = int(np.argmax(p))
    assert j == int(np.argmin(np.abs(GRID - 1.5)))
    assert np.all(np.diff(p[: j + 1]) >= 0) and np.all(np.diff(p[j:]) <= 0)


@given(st.floats(0.7, 4.0), st.floats(0, 1e6), st.booleans(), st.floats(0, 10), st.floats(0.01, 10))
def test_prior_normalized_with_uniform_floor(h, gamma, init, c_hat, c):
    p = tracker.prior_density(PriorState(h, gamma, init), GRID, c, c_hat)
    assert p.sum() == pytest.approx(1, abs=1e-9)
    if init and c_hat > 0:
        assert np.all(p > 0)


def test_gaussian_matches_closed_form():
    for theta in np.linspace(0.7, 4, 17):
        assert tracker.gaussian_prior(theta, 1.5, C, 80.0) == pytest.approx(
            oracles.gaussian(theta, 1.5, C / 80.0), rel=1e-12)


def test_likelihood_examples():
    m = np.zeros(GRID.size)
    m[10] = 3
    np.testing.assert_array_equal(tracker.likelihood(Spectrum(GRID, m)), m / 3)
    np.testing.assert_allclose(tracker.likelihood(Spectrum(GRID, np.ones(GRID.size))), 1 / GRID.size)
    r = np.random.default_rng(0).exponential(size=GRID.size)
    lik = tracker.likelihood(Spectrum(GRID, r))
    assert lik.sum() == pytest.approx(1) and np.allclose(lik / r, lik[0] / r[0])
    with pytest.raises(ValueError):
        tracker.likelihood(Spectrum(GRID, np.zeros(GRID.size)))


def test_map_examples():
    flat = Spectrum(GRID, np.ones(GRID.size))
    assert tracker.map_estimate(flat, PriorState(1.5, 80.0, True)).freq == pytest.approx(1.5)
    est = tracker.map_estimate(_peaked((1.2, 1.0)), PriorState())
    assert est.freq == pytest.approx(1.2) and est.hr == 72
    spurious = _peaked((3.0, 1.0), (1.2, 0.8))
    assert tracker.map_estimate(spurious, PriorState(1.2, C / 0.05, True)).freq == pytest.approx(1.2)
    assert tracker.map_estimate(spurious, PriorState()).freq == pytest.approx(3.0)


def map_deviation(rng) -> float:
    n = int(rng.integers(3, 60))
    freqs = 0.7 + np.arange(n) / 60
    mags = rng.exponential(size=n) * (rng.random(n) > 0.1) + 1e-6
    h = float(rng.uniform(0.7, freqs[-1]))
    gamma = float(rng.choice([0.0, rng.uniform(0, 5), rng.uniform(5, 1e4)]))
    c, c_hat = float(rng.uniform(0.1, 10)), float(rng.uniform(0, 2))
    init = bool(rng.random() > 0.2)
    got = tracker.map_estimate(Spectrum(freqs, mags), PriorState(h, gamma, init), c, c_hat).freq
    ref = oracles.map_freq(freqs, mags, h, gamma, c, c_hat, init)
    return abs(got - ref) / ref


def test_map_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(300):
        assert map_deviation(rng) == 0.0


@given(st.integers(0, 2**31), st.floats(1e-3, 1e3))
def test_map_scale_invariant(seed, a):
    rng = np.random.default_rng(seed)
    m = rng.exponential(size=GRID.size)
    state = PriorState(float(rng.uniform(0.7, 4)), float(rng.uniform(0, 100)), True)
    f1 = tracker.map_estimate(Spectrum(GRID, m), state).freq
    assert tracker.map_estimate(Spectrum(GRID, a * m), state).freq == f1


@given(st.integers(0, 2**31))
def test_larger_gamma_pulls_toward_h(seed):
    rng = np.random.default_rng(seed)
    m = rng.exponential(size=GRID.size)
    h = float(rng.choice(GRID))
    g1, g2 = sorted(rng.uniform(0, 200, 2))
    f1 = oracles.map_freq(GRID, m, h, g1, C, C_HAT)
    f2 = oracles.map_freq(GRID, m, h, g2, C, C_HAT)
    assert abs(f2 - h) <= abs(f1 - h) + 1e-12
    assert tracker.map_estimate(Spectrum(GRID, m), PriorState(h, g2, True)).freq == f2


def test_dominant_likelihood_beats_prior():
    # the uniform floor lets a strong enough peak win against a sharp prior elsewhere
    state = PriorState(1.0, 1e6, True)
    p = tracker.prior_density(state, GRID, C, C_HAT)
    j_far = int(np.argmin(np.abs(GRID - 3.5)))
    ratio = p.max() / p[j_far]
    spec = _peaked((3.5, 10 * ratio))
    assert tracker.map_estimate(spec, state).freq == pytest.approx(GRID[j_far])


def test_track_single_window_equals_map():
    spec = _peaked((1.4, 1.0))
    assert tracker.track_sequence([spec], [5.0]) == [tracker.map_estimate(spec, PriorState())]


def test_track_constant_tone():
    spectra = [spectral.compute_spectrum(np.sin(2 * np.pi * 70 / 60 * np.arange(120) / 30), 30)] * 10
    out = tracker.track_sequence(spectra, [100.0] * 10)
    assert [e.hr for e in out] == [70] * 10


def test_track_rejects_spurious_window():
    spectra = [_peaked((1.2, 1.0))] * 3 + [_peaked((3.0, 1.0), (1.2, 0.8))] + [_peaked((1.2, 1.0))]
    out = tracker.track_sequence(spectra, [C / 0.05] * 5)
    assert abs(out[3].hr - out[2].hr) <= 3
    for i, spec in enumerate(spectra[1:], 1):
        prev = out[i - 1]
        assert out[i].freq == oracles.map_freq(GRID, spec.mags, prev.freq, C / 0.05, C, C_HAT)


def test_track_failed_window_holds_state():
    spectra = [_peaked((1.2, 1.0)), None, Spectrum(GRID, np.zeros(GRID.size)), _peaked((1.3, 1.0))]
    out = tracker.track_sequence(spectra, [80.0, 0.0, 0.0, 80.0])
    assert [e.flag for e in out] == ["", "failed", "failed", ""]
    assert out[1].freq == out[2].freq == pytest.approx(1.2)
    first = tracker.track_sequence([None], [1.0])[0]
    assert first.flag == "failed" and math.isnan(first.freq)
    with pytest.raises(ValueError):
        tracker.track_sequence([spectra[0]], [])


@given(st.integers(0, 2**31), st.integers(1, 8))
def test_zero_gamma_tracking_is_peak_picking(seed, n):
    rng = np.random.default_rng(seed)
    spectra = [Spectrum(GRID, rng.exponential(size=GRID.size)) for _ in range(n)]
    out = tracker.track_sequence(spectra, [0.0] * n)
    assert [e.freq for e in out] == [spectral.peak_hr(s)[0] for s in spectra]
    assert [e.hr for e in out] == [spectral.peak_hr(s)[1] for s in spectra]
