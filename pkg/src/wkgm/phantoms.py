"""Synthetic ground-truth generators.

Two phantom families back the test suite:

* ``ellipses``      - piecewise-smooth random-ellipse images multiplied by
                      smooth SOS-normalized coil profiles, Fourier-transformed
                      to k-space. Stands in for anatomical training/test data.
* ``exponentials``  - multi-coil k-space that is an exact sum of 2-D complex
                      exponentials with per-coil weights, so the lifted
                      block-Hankel matrix has exactly known rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kspace import fft2c, sos_combine

__all__ = ["PhantomSpec", "make_phantom", "coil_sensitivities"]

KINDS = ("ellipses", "exponentials")


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    shape: tuple[int, int]
    coils: int = 1
    seed: int = 0
    components: int = 2  # complex-exponential count; sets the Hankel rank

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; choose from {KINDS}")
        h, w = self.shape
        if h < 4 or w < 4:
            raise ValueError(f"grid {self.shape} too small")
        if self.coils < 1:
            raise ValueError("need at least one coil")
        if self.kind == "exponentials" and not (1 <= self.components <= min(h, w) // 2):
            raise ValueError(f"component count {self.components} infeasible on grid {self.shape}")


def coil_sensitivities(shape: tuple[int, int], coils: int) -> np.ndarray:
    """Smooth complex coil profiles, SOS-normalized so sum |s_c|^2 = 1 pixelwise."""
    h, w = shape
    if coils == 1:
        return np.ones((1, h, w), dtype=np.complex128)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy = (yy - (h - 1) / 2) / h
    xx = (xx - (w - 1) / 2) / w
    profiles = np.empty((coils, h, w), dtype=np.complex128)
    width = 0.45
    for c in range(coils):
        ang = 2 * np.pi * c / coils
        cy, cx = 0.30 * np.sin(ang), 0.30 * np.cos(ang)
        bump = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
        profiles[c] = (0.2 + bump) * np.exp(1j * np.pi * c / coils)
    norm = np.sqrt(np.sum(np.abs(profiles) ** 2, axis=0))
    return profiles / norm


def _ellipse_image(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    yy = (yy - (h - 1) / 2) / (h / 2)
    xx = (xx - (w - 1) / 2) / (w / 2)
    img = np.zeros((h, w), dtype=np.float64)

    def add(amp, cy, cx, ry, rx, theta):
        ct, st = np.cos(theta), np.sin(theta)
        u = (xx - cx) * ct + (yy - cy) * st
        v = -(xx - cx) * st + (yy - cy) * ct
        img[(u / rx) ** 2 + (v / ry) ** 2 <= 1.0] += amp

    add(1.0, 0.0, 0.0, 0.82, 0.78, 0.0)  # outer body
    for _ in range(rng.integers(4, 8)):
        add(
            rng.uniform(-0.6, 0.8),
            rng.uniform(-0.45, 0.45),
            rng.uniform(-0.45, 0.45),
            rng.uniform(0.08, 0.4),
            rng.uniform(0.08, 0.4),
            rng.uniform(0, np.pi),
        )
    img = np.clip(img, 0.0, None)
    peak = img.max()
    if peak == 0.0:  # cannot happen with the unit outer body, kept as a guard
        img[h // 2, w // 2] = 1.0
        peak = 1.0
    return img / peak


def _exponential_kspace(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    h, w = spec.shape
    t = spec.components
    # Rejection keeps component frequencies pairwise separated so the lifted
    # matrix is well conditioned within its true rank.
    freqs = np.empty((t, 2))
    n = 0
    while n < t:
        f = rng.uniform(-0.4, 0.4, size=2)
        if all(np.abs(f - g).max() > 0.08 for g in freqs[:n]):
            freqs[n] = f
            n += 1
    weights = rng.standard_normal((spec.coils, t)) + 1j * rng.standard_normal((spec.coils, t))
    weights += 0.3 * np.sign(weights.real)  # keep every coil weight away from zero
    ii = np.arange(h)[:, None]
    jj = np.arange(w)[None, :]
    k = np.zeros((spec.coils, h, w), dtype=np.complex128)
    for m in range(t):
        mode = np.exp(2j * np.pi * (freqs[m, 0] * ii + freqs[m, 1] * jj))
        k += weights[:, m, None, None] * mode[None]
    return k / np.abs(k).max()


def make_phantom(spec: PhantomSpec) -> tuple[np.ndarray, np.ndarray]:
    """Build (ground-truth image [H, W], multi-coil k-space [C, H, W]).

    Deterministic for a fixed spec. Ellipse phantoms have max magnitude 1 and
    SOS-combine back to the ground truth exactly because the coil profiles
    are SOS-normalized.
    """
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, spec.shape[0], spec.shape[1])))
    if spec.kind == "ellipses":
        img = _ellipse_image(spec.shape, rng)
        k = fft2c(img[None] * coil_sensitivities(spec.shape, spec.coils))
        return img, k
    k = _exponential_kspace(spec, rng)
    return sos_combine(k), k
