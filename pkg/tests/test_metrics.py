import math

import numpy as np
import pytest

from wkgm import psnr, ssim


def test_psnr_closed_form_uniform_offset():
    ref = np.zeros((16, 16))
    ref[8, 8] = 1.0  # peak 1
    test = ref + 0.1
    assert psnr(ref, test) == pytest.approx(20.0, abs=1e-12)


def test_psnr_identical_is_infinite():
    x = np.random.default_rng(0).random((12, 12))
    assert psnr(x, x) == math.inf


def test_psnr_scale_invariance():
    rng = np.random.default_rng(1)
    ref, test = rng.random((16, 16)), rng.random((16, 16))
    assert psnr(3.7 * ref, 3.7 * test) == pytest.approx(psnr(ref, test), rel=1e-12)


def test_psnr_monotone_in_noise_level():
    rng = np.random.default_rng(2)
    ref = rng.random((32, 32))
    noise = rng.standard_normal((32, 32))
    values = [psnr(ref, ref + a * noise) for a in (0.01, 0.03, 0.1, 0.3, 1.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_psnr_validation():
    with pytest.raises(ValueError, match="mismatch"):
        psnr(np.ones((4, 4)), np.ones((5, 5)))
    with pytest.raises(ValueError, match="zero"):
        psnr(np.zeros((4, 4)), np.ones((4, 4)))


def test_ssim_identity_is_one():
    x = np.random.default_rng(3).random((16, 16))
    assert ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_images_closed_form():
    a, b = 0.8, 0.5
    ref, test = np.full((16, 16), a), np.full((16, 16), b)
    # variance terms vanish; with span 0 the dynamic range falls back to 1
    c1 = (0.01 * 1.0) ** 2
    expected = (2 * a * b + c1) / (a * a + b * b + c1)
    assert ssim(ref, test) == pytest.approx(expected, rel=1e-12)


def test_ssim_symmetry_for_equal_ranges():
    rng = np.random.default_rng(4)
    ref = rng.random((20, 20))
    test = rng.random((20, 20))
    # force identical dynamic ranges so the only asymmetry (range of ref) vanishes
    ref[0, 0], ref[0, 1] = 0.0, 1.0
    test[0, 0], test[0, 1] = 0.0, 1.0
    assert ssim(ref, test) == pytest.approx(ssim(test, ref), rel=1e-12)


def test_ssim_bounded_and_discriminative():
    rng = np.random.default_rng(5)
    ref = rng.random((24, 24))
    for scale in (0.05, 0.3, 1.0):
        val = ssim(ref, ref + scale * rng.standard_normal((24, 24)))
        assert -1.0 - 1e-12 <= val <= 1.0 + 1e-12
        assert val < 1.0


def test_ssim_window_size_guard():
    with pytest.raises(ValueError, match="window"):
        ssim(np.ones((8, 8)), np.ones((8, 8)))
