import numpy as np
import pytest

from wkgm import (
    GaussianOracle,
    augment6,
    collapse6,
    dsm_loss,
    dsm_target,
    gaussian_oracle_score,
    geometric_schedule,
    perturb,
)


class ReplayScore:
    """Returns the exact perturbation-kernel score for the recorded draws."""

    def __init__(self, noise, sigmas):
        self.noise, self.sigmas = noise, sigmas

    def evaluate(self, x, sigma):
        return dsm_target(self.noise, self.sigmas[:, None, None, None])


class ZeroScore:
    def evaluate(self, x, sigma):
        return np.zeros_like(x)


def test_geometric_schedule_hand_values():
    sch = geometric_schedule(0.01, 1.0, 3)
    np.testing.assert_allclose(sch.sigmas, [1.0, 0.1, 0.01], rtol=1e-12)


def test_geometric_schedule_endpoints_and_ratios():
    sch = geometric_schedule(0.03, 2.0, 2)
    np.testing.assert_allclose(sch.sigmas, [2.0, 0.03], rtol=1e-12)
    sch = geometric_schedule(0.01, 1.0, 11)
    ratios = sch.sigmas[1:] / sch.sigmas[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    assert sch.sigma_max == 1.0 and sch.sigma_min == 0.01 and sch.n == 11


def test_schedule_validation():
    with pytest.raises(ValueError):
        geometric_schedule(1.0, 0.01, 10)
    with pytest.raises(ValueError):
        geometric_schedule(0.01, 1.0, 1)


def test_perturb_zero_sigma_is_identity():
    x = np.random.default_rng(0).standard_normal((6, 4, 4))
    np.testing.assert_array_equal(perturb(x, 0.0, np.random.default_rng(1)), x)
    np.testing.assert_array_equal(perturb(x, 0.5, None), x)  # zero-noise hook


def test_perturb_moments():
    rng = np.random.default_rng(2)
    x = np.zeros((6, 130, 130))  # > 1e5 entries
    sigma = 0.7
    diff = perturb(x, sigma, rng) - x
    n = diff.size
    assert abs(diff.var() - sigma**2) <= 0.03 * sigma**2
    assert abs(diff.mean()) <= 4 * sigma / np.sqrt(n)


def test_augment_collapse_round_trip_is_exact():
    rng = np.random.default_rng(3)
    k = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
    t = augment6(k)
    assert t.shape == (6, 5, 4)
    np.testing.assert_array_equal(t[0], t[2])
    np.testing.assert_array_equal(t[1], t[5])
    np.testing.assert_array_equal(collapse6(t), k)  # bitwise


def test_augment_of_zeros_and_replica_averaging():
    np.testing.assert_array_equal(augment6(np.zeros((4, 4), complex)), np.zeros((6, 4, 4)))
    t = np.zeros((6, 1, 1))
    t[0], t[2], t[4] = 1.0, 4.0, 1.0  # real replicas {1, 4, 1}
    assert collapse6(t)[0, 0] == pytest.approx(2.0, abs=1e-15)


def test_dsm_target_scale_covariance():
    z = np.random.default_rng(4).standard_normal((6, 4, 4))
    np.testing.assert_allclose(dsm_target(z, 0.4), 0.5 * dsm_target(z, 0.2), atol=1e-15)


def test_dsm_loss_zero_for_perfect_score():
    rng = np.random.default_rng(5)
    batch = rng.standard_normal((8, 6, 4, 4))
    sch = geometric_schedule(0.01, 1.0, 20)
    idx = rng.integers(0, 20, size=8)
    noise = rng.standard_normal(batch.shape)
    model = ReplayScore(noise, sch.sigmas[idx])
    assert dsm_loss(model, batch, sch, sigma_indices=idx, noise=noise) == pytest.approx(0.0, abs=1e-20)


def test_dsm_loss_zero_model_expectation():
    rng = np.random.default_rng(6)
    batch = np.zeros((64, 6, 8, 8))
    sch = geometric_schedule(0.01, 1.0, 100)
    loss = dsm_loss(ZeroScore(), batch, sch, rng)
    n_entries = 6 * 8 * 8
    assert abs(loss - n_entries) <= 0.05 * n_entries


def test_dsm_loss_batch_permutation_invariance():
    rng = np.random.default_rng(7)
    batch = rng.standard_normal((16, 6, 4, 4))
    sch = geometric_schedule(0.01, 1.0, 50)
    idx = rng.integers(0, 50, size=16)
    noise = rng.standard_normal(batch.shape)
    oracle = GaussianOracle(mean=np.zeros((6, 4, 4)), variance=1.0)
    base = dsm_loss(oracle, batch, sch, sigma_indices=idx, noise=noise)
    perm = rng.permutation(16)
    permuted = dsm_loss(oracle, batch[perm], sch, sigma_indices=idx[perm], noise=noise[perm])
    assert permuted == pytest.approx(base, rel=1e-12)


def test_gaussian_oracle_score_values():
    oracle = GaussianOracle(mean=np.zeros((6, 4, 4)), variance=1.0)
    x = 2.0 * np.ones((6, 4, 4))
    np.testing.assert_allclose(gaussian_oracle_score(oracle, x, 0.0), -2.0 * np.ones_like(x), atol=1e-15)
    np.testing.assert_array_equal(gaussian_oracle_score(oracle, oracle.mean, 1.3), np.zeros_like(x))


def test_gaussian_oracle_algebraic_identity():
    rng = np.random.default_rng(8)
    mu = rng.standard_normal((6, 4, 4))
    oracle = GaussianOracle(mean=mu, variance=0.49)
    x = rng.standard_normal((6, 4, 4))
    for sigma in (0.0, 0.3, 1.7):
        s = gaussian_oracle_score(oracle, x, sigma)
        np.testing.assert_allclose(s * (0.49 + sigma**2) + (x - mu), 0.0, atol=1e-12)


def test_oracle_dsm_consistency_with_theoretical_minimum():
    """DSM loss of the exact score sits at the analytic minimum (MC check)."""
    rng = np.random.default_rng(9)
    sigma_d = 0.5
    mu = rng.standard_normal((6, 8, 8))
    oracle = GaussianOracle(mean=mu, variance=sigma_d**2)
    sch = geometric_schedule(0.01, 1.0, 200)
    data = mu + sigma_d * rng.standard_normal((512, 6, 8, 8))
    measured = dsm_loss(oracle, data, sch, np.random.default_rng(10))

    # independent Monte Carlo of E[lambda * |target - true_score|^2]
    mc_rng = np.random.default_rng(11)
    idx = mc_rng.integers(0, sch.n, size=512)
    sig = sch.sigmas[idx][:, None, None, None]
    x0 = mu + sigma_d * mc_rng.standard_normal((512, 6, 8, 8))
    z = mc_rng.standard_normal(x0.shape)
    xt = x0 + sig * z
    diff = dsm_target(z, sig) - (mu - xt) / (sigma_d**2 + sig**2)
    reference = float(np.mean(sig[:, 0, 0, 0] ** 2 * np.sum(diff**2, axis=(1, 2, 3))))
    assert abs(measured - reference) <= 0.10 * reference


def test_oracle_batched_means_broadcast():
    rng = np.random.default_rng(12)
    means = rng.standard_normal((3, 6, 4, 4))
    oracle = GaussianOracle(mean=means, variance=0.25)
    x = rng.standard_normal((3, 6, 4, 4))
    out = oracle.evaluate(x, 0.5)
    for i in range(3):
        single = GaussianOracle(mean=means[i], variance=0.25)
        np.testing.assert_allclose(out[i], single.evaluate(x[i], 0.5), atol=1e-15)
    with pytest.raises(ValueError, match="batched"):
        oracle.evaluate(x[0], 0.5)
