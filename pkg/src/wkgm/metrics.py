"""PSNR and SSIM image quality metrics.

PSNR uses the maximum of the reference image as the peak value. SSIM follows
the classic formulation: 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
K2 = 0.03, dynamic range taken from the reference, mean over the valid
(fully overlapping) window positions.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["psnr", "ssim"]

_WIN = 11
_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def _check_pair(ref: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = np.asarray(ref, dtype=np.float64)
    t = np.asarray(test, dtype=np.float64)
    if r.shape != t.shape:
        raise ValueError(f"shape mismatch: ref {r.shape} vs test {t.shape}")
    return r, t


def psnr(ref: np.ndarray, test: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    r, t = _check_pair(ref, test)
    peak = float(r.max())
    if peak == 0.0 and float(r.min()) == 0.0:
        raise ValueError("reference image is all zero")
    mse = float(np.mean((r - t) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gauss_kernel() -> np.ndarray:
    x = np.arange(_WIN, dtype=np.float64) - (_WIN - 1) / 2
    g = np.exp(-(x**2) / (2 * _SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Valid-mode local weighted mean via a sliding window; grids here are
    # small enough that the O(H*W*win^2) tensordot is fine.
    view = np.lib.stride_tricks.sliding_window_view(img, (_WIN, _WIN))
    return np.tensordot(view, kernel, axes=([2, 3], [0, 1]))


def ssim(ref: np.ndarray, test: np.ndarray) -> float:
    """Mean local structural similarity between two real images."""
    r, t = _check_pair(ref, test)
    if min(r.shape) < _WIN:
        raise ValueError(f"image {r.shape} smaller than the {_WIN}x{_WIN} SSIM window")
    span = float(r.max() - r.min())
    if span == 0.0:
        span = 1.0  # degenerate constant reference; keeps ssim(x, x) = 1
    c1 = (_K1 * span) ** 2
    c2 = (_K2 * span) ** 2
    kernel = _gauss_kernel()

    mu_r = _windowed_mean(r, kernel)
    mu_t = _windowed_mean(t, kernel)
    var_r = _windowed_mean(r * r, kernel) - mu_r**2
    var_t = _windowed_mean(t * t, kernel) - mu_t**2
    cov = _windowed_mean(r * t, kernel) - mu_r * mu_t

    num = (2 * mu_r * mu_t + c1) * (2 * cov + c2)
    den = (mu_r**2 + mu_t**2 + c1) * (var_r + var_t + c2)
    return float(np.mean(num / den))
