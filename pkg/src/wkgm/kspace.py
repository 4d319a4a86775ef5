"""Complex multi-coil k-space data model and Fourier plumbing.

Conventions used across the whole package:

* A single k-space plane or image is a complex ``[H, W]`` array; multi-coil
  k-space is complex ``[C, H, W]`` with the coil axis first.
* All transforms are centered (DC sits at ``[H // 2, W // 2]``) and
  orthonormal, so Parseval holds exactly and round trips are lossless up to
  float precision.
* Sampling masks are ``[H, W]`` arrays with entries in {0, 1}.

Everything here is a pure function of its inputs and safe to call from
multiple threads.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fft2c",
    "ifft2c",
    "apply_mask",
    "sos_combine",
    "zero_filled_recon",
    "as_multicoil",
    "check_mask",
]

_AXES = (-2, -1)


def fft2c(image: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2-D FFT (image -> k-space).

    numpy places DC in the corner; MRI convention puts it in the grid
    center, hence the ifftshift / fftshift sandwich. ``norm="ortho"``
    makes the transform unitary. Works on any ``[..., H, W]`` stack.
    """
    image = np.asarray(image)
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(image, axes=_AXES), axes=_AXES, norm="ortho"),
        axes=_AXES,
    )


def ifft2c(kspace: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2-D inverse FFT (k-space -> image).

    Exact inverse of :func:`fft2c` under the same shift and normalization
    convention.
    """
    kspace = np.asarray(kspace)
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(kspace, axes=_AXES), axes=_AXES, norm="ortho"),
        axes=_AXES,
    )


def as_multicoil(kspace: np.ndarray) -> np.ndarray:
    """Coerce to a complex ``[C, H, W]`` array, validating shape and finiteness."""
    k = np.asarray(kspace)
    if k.ndim == 2:
        k = k[None]
    if k.ndim != 3:
        raise ValueError(f"expected k-space of shape [C, H, W], got {k.shape}")
    if k.shape[-2] < 4 or k.shape[-1] < 4:
        raise ValueError(f"grid too small for a {k.shape[-2]}x{k.shape[-1]} k-space; need at least 4x4")
    k = k.astype(np.complex128, copy=False)
    if not np.isfinite(k).all():
        raise ValueError("k-space contains non-finite entries")
    return k


def check_mask(mask: np.ndarray, kshape: tuple[int, ...] | None = None) -> np.ndarray:
    """Validate a {0,1} sampling mask, optionally against a k-space shape."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"expected mask of shape [H, W], got {m.shape}")
    vals = np.unique(m)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError("mask entries must be 0 or 1")
    if kshape is not None and tuple(m.shape) != tuple(kshape[-2:]):
        raise ValueError(f"shape mismatch: k-space {tuple(kshape)} vs mask {tuple(m.shape)}")
    return m.astype(bool)


def apply_mask(
    kspace: np.ndarray,
    mask: np.ndarray,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Retain sampled k-space entries, zero the rest.

    Models acquisition of undersampled measurements. ``noise_std`` optionally
    adds complex Gaussian noise (std is on the complex magnitude, i.e.
    ``E|n|^2 = noise_std^2``) to the *sampled* entries only; the default is
    noiseless.
    """
    k = as_multicoil(kspace)
    m = check_mask(mask, k.shape)
    out = k * m
    if noise_std:
        if rng is None:
            raise ValueError("noise_std > 0 requires an rng")
        s = noise_std / np.sqrt(2.0)
        noise = s * (rng.standard_normal(out.shape) + 1j * rng.standard_normal(out.shape))
        out = out + noise * m
    return out


def sos_combine(kspace: np.ndarray) -> np.ndarray:
    """Square root of the sum of squared coil images.

    Transforms each coil to the image domain and combines magnitudes,
    the standard coil combination for the final real-valued image.

    Returns a nonnegative real ``[H, W]`` array.
    """
    k = as_multicoil(kspace)
    coil_images = ifft2c(k)
    return np.sqrt(np.sum(np.abs(coil_images) ** 2, axis=0))


def zero_filled_recon(measured: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Baseline reconstruction: zero-fill unsampled entries and SOS-combine."""
    return sos_combine(apply_mask(measured, mask))
