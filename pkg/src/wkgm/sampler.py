"""Reverse-diffusion reconstruction in weighted k-space.

The reconstruction loop alternates, per outer noise level:

    predictor update -> remove weight -> collapse channels -> data
    consistency -> re-weight -> re-augment

followed by M corrector (annealed Langevin) rounds that each run the same
unweight / collapse / consistency / re-weight cycle. Coils travel through the
single-coil prior as independent batch items, each with its own seeded noise
stream; inter-coil coupling only enters through an optional joint projection
hook (used by the structured low-rank variant).

``sample_prior`` runs the bare predictor-corrector chain with no measurement
coupling, which is what the analytic-oracle sampler checks exercise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kspace import as_multicoil, check_mask
from .prior import NoiseSchedule, ScoreModel, augment6, collapse6, geometric_schedule
from .weighting import WeightMap, apply_weight, remove_weight

__all__ = [
    "SamplerConfig",
    "NumericalError",
    "NumericalDivergenceError",
    "predictor_step",
    "corrector_step",
    "langevin_step_size",
    "data_consistency",
    "sample_prior",
    "reconstruct_wkgm",
]


class NumericalError(RuntimeError):
    """Base class for non-finite numerical failures (sampling or training)."""


class NumericalDivergenceError(NumericalError):
    """Raised when the sampler state stops being finite."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite sampler state at outer iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SamplerConfig:
    n_steps: int = 1000          # outer noise levels (schedule length)
    corrector_steps: int = 1     # Langevin rounds per outer level
    snr: float = 0.075           # corrector signal-to-noise ratio
    lam_dc: float = math.inf     # data-consistency blend; inf replaces exactly
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.corrector_steps < 0:
            raise ValueError("corrector_steps must be >= 0")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.lam_dc <= 0:
            raise ValueError("lam_dc must be positive")


RngLike = np.random.Generator | Sequence[np.random.Generator] | None


def _draw_noise(shape: tuple[int, ...], rng: RngLike) -> np.ndarray:
    """Standard normal noise; None means the zero-noise test mode.

    A sequence of generators supplies one independent stream per leading-axis
    item, which keeps batch items reproducible regardless of batch order.
    """
    if rng is None:
        return np.zeros(shape)
    if isinstance(rng, np.random.Generator):
        return rng.standard_normal(shape)
    if len(rng) != shape[0]:
        raise ValueError(f"got {len(rng)} rng streams for {shape[0]} batch items")
    return np.stack([g.standard_normal(shape[1:]) for g in rng])


def _item_norms(x: np.ndarray) -> np.ndarray:
    flat = x.reshape(x.shape[0], -1) if x.ndim == 4 else x.reshape(1, -1)
    return np.linalg.norm(flat, axis=1)


def predictor_step(
    x: np.ndarray,
    model: ScoreModel,
    sigma_next: float,
    sigma_cur: float,
    rng: RngLike = None,
) -> np.ndarray:
    """One reverse-diffusion step from noise level sigma_cur down to sigma_next:

        x + (sigma_cur^2 - sigma_next^2) * score(x, sigma_cur)
          + sqrt(sigma_cur^2 - sigma_next^2) * z
    """
    if not sigma_cur > sigma_next >= 0:
        raise ValueError(f"need sigma_cur > sigma_next >= 0, got ({sigma_cur}, {sigma_next})")
    x = np.asarray(x, dtype=np.float64)
    dvar = sigma_cur**2 - sigma_next**2
    z = _draw_noise(x.shape, rng)
    return x + dvar * model.evaluate(x, sigma_cur) + np.sqrt(dvar) * z


def langevin_step_size(noise: np.ndarray, score: np.ndarray, snr: float) -> np.ndarray:
    """Per-item Langevin step size ``2 * (snr * |z| / |score|)^2``.

    Zero where the score vanishes, making the corrector a no-op there.
    """
    zn = _item_norms(np.asarray(noise, dtype=np.float64))
    sn = _item_norms(np.asarray(score, dtype=np.float64))
    return np.where(sn > 0, 2.0 * (snr * zn / np.where(sn > 0, sn, 1.0)) ** 2, 0.0)


def corrector_step(
    x: np.ndarray,
    model: ScoreModel,
    sigma: float,
    snr: float,
    rng: RngLike = None,
) -> np.ndarray:
    """One annealed Langevin round at fixed noise level sigma:

        x + eps * score(x, sigma) + sqrt(2 * eps) * z
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=np.float64)
    score = model.evaluate(x, sigma)
    z = _draw_noise(x.shape, rng)
    eps = langevin_step_size(z, score, snr)
    shape = (-1, 1, 1, 1) if x.ndim == 4 else (1,)
    eps = eps.reshape(shape)
    return x + eps * score + np.sqrt(2.0 * eps) * z


def data_consistency(
    k_gen: np.ndarray, measured: np.ndarray, mask: np.ndarray, lam: float = math.inf
) -> np.ndarray:
    """Blend generated k-space with the acquired samples on the sampled set.

    Sampled entries become ``(k_gen + lam * y) / (1 + lam)``; with ``lam=inf``
    they are replaced by the measurements exactly. Unsampled entries pass
    through untouched.
    """
    k = np.asarray(k_gen, dtype=np.complex128)
    y = np.asarray(measured, dtype=np.complex128)
    if k.shape != y.shape:
        raise ValueError(f"shape mismatch: k-space {k.shape} vs measurements {y.shape}")
    m = check_mask(mask, k.shape)
    if lam <= 0:
        raise ValueError("lam must be positive")
    out = k.copy()
    if math.isinf(lam):
        out[..., m] = y[..., m]
    else:
        out[..., m] = (k[..., m] + lam * y[..., m]) / (1.0 + lam)
    return out


def sample_prior(
    model: ScoreModel,
    schedule: NoiseSchedule,
    shape: tuple[int, int],
    n_samples: int = 1,
    corrector_steps: int = 1,
    snr: float = 0.075,
    rng: np.random.Generator | int = 0,
) -> np.ndarray:
    """Unconditional sampling from the learned prior (no measurements).

    Runs the plain predictor-corrector chain over the schedule and returns the
    raw ``[n_samples, 6, H, W]`` end states.
    """
    if isinstance(rng, int):
        rng = np.random.default_rng(rng)
    h, w = shape
    x = schedule.sigma_max * rng.standard_normal((n_samples, 6, h, w))
    for j in range(schedule.n - 1):
        s_cur, s_next = schedule.sigmas[j], schedule.sigmas[j + 1]
        x = predictor_step(x, model, s_next, s_cur, rng)
        for _ in range(corrector_steps):
            x = corrector_step(x, model, s_next, snr, rng)
        if not np.isfinite(x).all():
            raise NumericalDivergenceError(j)
    return x


def _check_model_weighting(model: ScoreModel, wmap: WeightMap) -> None:
    cutoff = getattr(model, "cutoff", None)
    smoothness = getattr(model, "smoothness", None)
    if cutoff is not None and not math.isclose(cutoff, wmap.cutoff, rel_tol=1e-9):
        raise ValueError(f"model weighting cutoff {cutoff} != weight map cutoff {wmap.cutoff}")
    if smoothness is not None and not math.isclose(smoothness, wmap.smoothness, rel_tol=1e-9):
        raise ValueError(
            f"model weighting smoothness {smoothness} != weight map smoothness {wmap.smoothness}"
        )


def _coil_rngs(seed: int, coils: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(coils)]


def _pc_reconstruct(
    measured: np.ndarray,
    mask: np.ndarray,
    model: ScoreModel,
    wmap: WeightMap,
    schedule: NoiseSchedule | None,
    config: SamplerConfig,
    project: Callable[[np.ndarray], np.ndarray] | None,
    on_iteration: Callable[[int, np.ndarray], None] | None,
    rngs: Sequence[np.random.Generator] | None,
) -> np.ndarray:
    y = as_multicoil(measured)
    m = check_mask(mask, y.shape)
    if y.shape[-2:] != wmap.values.shape:
        raise ValueError(f"shape mismatch: k-space {y.shape} vs weight map {wmap.values.shape}")
    _check_model_weighting(model, wmap)
    if schedule is None:
        schedule = geometric_from_model(model, config.n_steps)
    coils = y.shape[0]
    if rngs is None:
        rngs = _coil_rngs(config.seed, coils)

    def dc_cycle(x: np.ndarray, use_project: bool) -> tuple[np.ndarray, np.ndarray]:
        k6 = remove_weight(x, wmap)
        k = collapse6(k6)
        if use_project and project is not None:
            k = project(k)
        k = data_consistency(k, y, m, config.lam_dc)
        return augment6(apply_weight(k, wmap)), k

    x = schedule.sigma_max * _draw_noise((coils, 6, *wmap.values.shape), rngs)
    k = collapse6(x)
    for j in range(schedule.n - 1):
        s_cur, s_next = schedule.sigmas[j], schedule.sigmas[j + 1]
        x = predictor_step(x, model, s_next, s_cur, rngs)
        x, k = dc_cycle(x, use_project=False)
        for _ in range(config.corrector_steps):
            x = corrector_step(x, model, s_next, config.snr, rngs)
            x, k = dc_cycle(x, use_project=True)
        if not np.isfinite(x).all():
            raise NumericalDivergenceError(j)
        if on_iteration is not None:
            on_iteration(j, k)
    return k


def geometric_from_model(model: ScoreModel, n_steps: int) -> NoiseSchedule:
    """Schedule from the model's own noise range, resampled to n_steps levels."""
    stored = getattr(model, "schedule", None)
    if stored is None:
        raise ValueError("model carries no schedule; pass one explicitly")
    if stored.n == n_steps:
        return stored
    return geometric_schedule(stored.sigma_min, stored.sigma_max, n_steps)


def reconstruct_wkgm(
    measured: np.ndarray,
    mask: np.ndarray,
    model: ScoreModel,
    wmap: WeightMap,
    schedule: NoiseSchedule | None = None,
    config: SamplerConfig = SamplerConfig(),
    on_iteration: Callable[[int, np.ndarray], None] | None = None,
    rngs: Sequence[np.random.Generator] | None = None,
) -> np.ndarray:
    """Reconstruct multi-coil k-space from undersampled measurements.

    Deterministic given ``config.seed`` (or explicit per-coil ``rngs``).
    ``on_iteration(step, k)`` is invoked after every outer level with the
    current measurement-consistent k-space estimate.
    """
    return _pc_reconstruct(
        measured, mask, model, wmap, schedule, config,
        project=None, on_iteration=on_iteration, rngs=rngs,
    )
