"""Variance-exploding diffusion prior: noise schedule, forward perturbation,
channel augmentation, the denoising score matching objective, and an analytic
Gaussian score oracle used to verify samplers and trained models.

The score model contract is duck-typed: anything with an
``evaluate(x, sigma) -> ndarray`` method works, where ``x`` is a real
``[6, H, W]`` tensor or a ``[B, 6, H, W]`` stack and ``sigma`` is a scalar or
per-item array. Scores carry units of 1/amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

__all__ = [
    "NoiseSchedule",
    "geometric_schedule",
    "perturb",
    "augment6",
    "collapse6",
    "dsm_target",
    "dsm_loss",
    "GaussianOracle",
    "gaussian_oracle_score",
    "ScoreModel",
]


@runtime_checkable
class ScoreModel(Protocol):
    def evaluate(self, x: np.ndarray, sigma) -> np.ndarray: ...


@dataclass(frozen=True)
class NoiseSchedule:
    """Descending positive noise scales, sigma_max first, sigma_min last."""

    sigmas: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.sigmas, dtype=np.float64)
        if s.ndim != 1 or len(s) < 2:
            raise ValueError("schedule needs at least two noise scales")
        if not (s > 0).all():
            raise ValueError("noise scales must be positive")
        if not (np.diff(s) < 0).all():
            raise ValueError("noise scales must be strictly decreasing")
        object.__setattr__(self, "sigmas", s)

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_min(self) -> float:
        return float(self.sigmas[-1])

    @property
    def n(self) -> int:
        return len(self.sigmas)


def geometric_schedule(sigma_min: float = 0.01, sigma_max: float = 1.0, n: int = 1000) -> NoiseSchedule:
    """Geometrically spaced scales from sigma_max down to sigma_min."""
    if not (0 < sigma_min < sigma_max):
        raise ValueError(f"need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})")
    if n < 2:
        raise ValueError("need at least two scales")
    i = np.arange(n, dtype=np.float64)
    ascending = sigma_min * (sigma_max / sigma_min) ** (i / (n - 1))
    return NoiseSchedule(sigmas=ascending[::-1].copy())


def perturb(x0: np.ndarray, sigma: float, rng: np.random.Generator | None) -> np.ndarray:
    """Single-shot forward diffusion: ``x0 + sigma * z`` with standard normal z.

    ``rng=None`` disables the noise (test hook).
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    x0 = np.asarray(x0, dtype=np.float64)
    if rng is None or sigma == 0:
        return x0.copy()
    return x0 + sigma * rng.standard_normal(x0.shape)


def augment6(kspace: np.ndarray) -> np.ndarray:
    """Stack (real, imag) planes of a complex grid three times -> [..., 6, H, W]."""
    k = np.asarray(kspace)
    re, im = k.real.astype(np.float64), k.imag.astype(np.float64)
    return np.stack([re, im, re, im, re, im], axis=-3)


def collapse6(tensor: np.ndarray) -> np.ndarray:
    """Average the three (real, imag) replicas back to a complex grid.

    The mean is computed as ``a + ((b - a) + (c - a)) / 3`` so that collapsing
    freshly augmented (identical-replica) data returns the input bit for bit.
    """
    t = np.asarray(tensor, dtype=np.float64)
    if t.shape[-3] != 6:
        raise ValueError(f"expected a [..., 6, H, W] tensor, got {t.shape}")

    def mean3(a, b, c):
        return a + ((b - a) + (c - a)) / 3.0

    re = mean3(t[..., 0, :, :], t[..., 2, :, :], t[..., 4, :, :])
    im = mean3(t[..., 1, :, :], t[..., 3, :, :], t[..., 5, :, :])
    return re + 1j * im


def dsm_target(noise: np.ndarray, sigma) -> np.ndarray:
    """Score of the VE perturbation kernel at ``x0 + sigma * z``: ``-z / sigma``."""
    return -np.asarray(noise) / sigma


def dsm_loss(
    model: ScoreModel,
    batch: np.ndarray | Sequence[np.ndarray],
    schedule: NoiseSchedule,
    rng: np.random.Generator | None = None,
    sigma_indices: np.ndarray | None = None,
    noise: np.ndarray | None = None,
) -> float:
    """Denoising score matching objective on a batch of clean tensors.

    Per item: ``sigma^2 * sum((model(x0 + sigma z, sigma) + z / sigma)^2)``
    with sigma drawn uniformly over schedule indices; returns the batch mean.
    ``sigma_indices`` and ``noise`` may be supplied explicitly to replay fixed
    draws (testing / gradient checks); otherwise they come from ``rng``.
    """
    x0 = np.stack([np.asarray(b, dtype=np.float64) for b in batch]) if not isinstance(batch, np.ndarray) else np.asarray(batch, dtype=np.float64)
    if x0.ndim != 4:
        raise ValueError(f"expected batch [B, 6, H, W], got {x0.shape}")
    if x0.shape[0] == 0:
        raise ValueError("empty batch")
    nb = x0.shape[0]
    if sigma_indices is None or noise is None:
        if rng is None:
            raise ValueError("need an rng when draws are not supplied")
        if sigma_indices is None:
            sigma_indices = rng.integers(0, schedule.n, size=nb)
        if noise is None:
            noise = rng.standard_normal(x0.shape)
    sigmas = schedule.sigmas[np.asarray(sigma_indices)]
    s4 = sigmas[:, None, None, None]
    xt = x0 + s4 * noise
    scores = model.evaluate(xt, sigmas)
    resid = scores - dsm_target(noise, s4)
    per_item = sigmas**2 * np.sum(resid**2, axis=(1, 2, 3))
    return float(per_item.mean())


@dataclass(frozen=True)
class GaussianOracle:
    """Closed-form score of an isotropic Gaussian data distribution.

    ``mean`` is a [6, H, W] tensor or a [B, 6, H, W] stack of per-item means
    (one per coil when driving multi-coil reconstruction). The diffused
    density at scale sigma is Gaussian with variance ``variance + sigma^2``,
    so the score is exact at every noise level; this is the reference any
    trained estimator and the samplers are checked against.
    """

    mean: np.ndarray
    variance: float  # data variance sigma_d^2
    cutoff: float = 0.02
    smoothness: float = 0.5
    schedule: NoiseSchedule = field(default_factory=geometric_schedule)

    def __post_init__(self) -> None:
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))

    def evaluate(self, x: np.ndarray, sigma) -> np.ndarray:
        return gaussian_oracle_score(self, x, sigma)


def gaussian_oracle_score(oracle: GaussianOracle, x: np.ndarray, sigma) -> np.ndarray:
    """``(mean - x) / (variance + sigma^2)``, broadcast over batch items."""
    x = np.asarray(x, dtype=np.float64)
    sig = np.asarray(sigma, dtype=np.float64)
    if np.any(sig < 0):
        raise ValueError("sigma must be nonnegative")
    if sig.ndim == 1:
        sig = sig[:, None, None, None]
    mean = oracle.mean
    if mean.ndim == 4 and x.ndim == 3:
        raise ValueError("per-item oracle means require a batched input")
    return (mean - x) / (oracle.variance + sig**2)
