import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from mombat import quality
from mombat.ingest import Landmark, LandmarkTrack
from mombat.spectral import Spectrum

pos = st.floats(0, 1e3, allow_nan=False)


def _track(z):
    z = np.asarray(z, float)
    return LandmarkTrack([[Landmark(j, "boundary", 0.0, 0.0, float(v)) for j, v in enumerate(row)]
                          for row in z])


def _spec(m):
    m = np.asarray(m, float)
    return Spectrum(0.7 + np.arange(m.size) / 60, m)


def test_static_landmarks():
    np.testing.assert_array_equal(quality.out_of_plane_deviations(_track(np.ones((5, 3)))), 0)


def test_single_jump():
    z = np.zeros((6, 4))
    z[3:, 1] = 4  # between frames 2 and 3
    d = quality.out_of_plane_deviations(_track(z))
    np.testing.assert_array_equal(d, [0, 0, 4, 0, 0])


def test_ignores_other_groups():
    frames = [[Landmark(0, "boundary", 0, 0, 0), Landmark(1, "nose", 0, 0, float(k))] for k in range(3)]
    np.testing.assert_array_equal(quality.out_of_plane_deviations(LandmarkTrack(frames)), 0)


def test_no_boundary():
    with pytest.raises(ValueError, match="boundary"):
        quality.out_of_plane_deviations(LandmarkTrack([[Landmark(0, "nose", 0, 0, 0)]] * 2))


def quality_deviation(rng) -> float:
    z = rng.normal(0, 3, (rng.integers(2, 12), rng.integers(1, 6)))
    d = quality.out_of_plane_deviations(_track(z))
    dev = float(np.max(np.abs(d - oracles.deviations(z))))
    q = quality.quality_from_deviations(d)
    return max(dev, float(np.max(np.abs(q - oracles.quality(d)))))


def test_deviations_and_quality_match_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert quality_deviation(rng) <= 1e-12


def test_quality_examples():
    np.testing.assert_allclose(quality.quality_from_deviations([2, 0, 4]), [0.5, 1.0, 0.0])
    np.testing.assert_array_equal(quality.quality_from_deviations([3, 3, 3]), 1)
    with pytest.raises(ValueError):
        quality.quality_from_deviations([])


@given(hnp.arrays(float, st.integers(1, 30), elements=pos), st.floats(0.01, 100), st.floats(-100, 100))
def test_quality_affine_invariant(d, a, b):
    assume(np.ptp(d) == 0 or np.ptp(d) > 1e-3)
    q = quality.quality_from_deviations(d)
    assert np.all((q >= 0) & (q <= 1))
    if np.ptp(d) > 0:
        assert q.max() == 1 and q.min() == 0
    np.testing.assert_allclose(quality.quality_from_deviations(a * d + b), q, atol=1e-6)


def test_psnr_examples():
    m = np.zeros(50)
    m[20] = 1
    assert quality.psnr(_spec(m), 2) == quality.GAMMA_CAP
    # a flat spectrum ties everywhere; the lowest-index rule puts the peak on the band edge
    assert quality.psnr(_spec(np.ones(40)), 2) == pytest.approx(3 / 37)
    interior = np.ones(40)
    interior[20] += 1e-9
    assert quality.psnr(_spec(interior), 2) == pytest.approx(5 / 35)
    with pytest.raises(ValueError):
        quality.psnr(_spec(np.zeros(10)))


def test_psnr_clamps_at_edge():
    m = np.ones(10)
    m[0] = 5
    assert quality.psnr(_spec(m), 2) == pytest.approx(7 / 7)


def psnr_deviation(rng) -> float:
    n = int(rng.integers(1, 40))
    m = rng.exponential(size=n) * (rng.random(n) > 0.2)
    if m.sum() == 0:
        m[0] = 1.0
    n_p = int(rng.integers(0, 5))
    got, ref = quality.psnr(_spec(m), n_p), oracles.psnr(m, n_p)
    return abs(got - ref) / max(abs(ref), 1e-300)


def test_psnr_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        assert psnr_deviation(rng) <= 1e-12


@given(hnp.arrays(float, st.integers(6, 40), elements=st.floats(0.01, 100)), st.floats(0.001, 1000))
def test_psnr_scale_invariant(m, a):
    assert quality.psnr(_spec(a * m)) == pytest.approx(quality.psnr(_spec(m)), rel=1e-9)


@given(hnp.arrays(float, st.integers(8, 40), elements=st.floats(0.01, 100)), st.floats(0.01, 0.9))
def test_psnr_increases_with_mass_moved_to_peak(m, frac):
    s = _spec(m)
    peak = int(np.argmax(m))
    far = int(np.argmax(np.where(np.abs(np.arange(m.size) - peak) > 2, m, -1)))
    moved = m.copy()
    delta = frac * m[far]
    moved[far] -= delta
    moved[peak] += delta
    assert quality.psnr(_spec(moved)) > quality.psnr(s)
