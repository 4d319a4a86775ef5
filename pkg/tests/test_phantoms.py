import numpy as np
import pytest

from wkgm import HankelSpec, coil_sensitivities, hankel_forward, make_phantom, sos_combine
from wkgm.phantoms import PhantomSpec


def test_exponential_phantom_has_exact_hankel_rank():
    _, k = make_phantom(PhantomSpec("exponentials", (16, 16), coils=2, seed=0, components=2))
    a = hankel_forward(k, HankelSpec(window=4))
    s = np.linalg.svd(a, compute_uv=False)
    assert s[2] / s[0] < 1e-8


@pytest.mark.parametrize("components", [1, 3])
def test_exponential_rank_tracks_component_count(components):
    _, k = make_phantom(
        PhantomSpec("exponentials", (16, 16), coils=2, seed=1, components=components)
    )
    s = np.linalg.svd(hankel_forward(k, HankelSpec(window=4)), compute_uv=False)
    assert s[components] / s[0] < 1e-8
    assert s[components - 1] / s[0] > 1e-8


def test_coil_profiles_are_sos_normalized():
    for coils in (1, 2, 4):
        s = coil_sensitivities((24, 20), coils)
        np.testing.assert_allclose(np.sum(np.abs(s) ** 2, axis=0), 1.0, atol=1e-10)


def test_ellipse_phantom_normalization_and_sos_consistency():
    gt, k = make_phantom(PhantomSpec("ellipses", (32, 32), coils=3, seed=2))
    assert gt.max() == pytest.approx(1.0, abs=1e-12)
    assert gt.min() >= 0.0
    # SOS-normalized profiles make the coil-combined image reproduce the truth
    np.testing.assert_allclose(sos_combine(k), gt, atol=1e-10)


def test_phantoms_are_deterministic():
    spec = PhantomSpec("exponentials", (16, 16), coils=2, seed=7, components=2)
    g1, k1 = make_phantom(spec)
    g2, k2 = make_phantom(spec)
    np.testing.assert_array_equal(g1, g2)
    np.testing.assert_array_equal(k1, k2)


def test_invalid_specs_rejected():
    with pytest.raises(ValueError, match="unknown phantom kind"):
        PhantomSpec("cube", (16, 16))
    with pytest.raises(ValueError, match="infeasible"):
        PhantomSpec("exponentials", (8, 8), components=7)
    with pytest.raises(ValueError, match="coil"):
        PhantomSpec("ellipses", (16, 16), coils=0)
