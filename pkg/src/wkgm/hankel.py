"""Structured low-rank (SAKE-style) machinery.

Sliding k-space neighborhoods across all coils are arranged into a
block-Hankel matrix whose low rank encodes the linear dependency between
coils. Projection onto the low-rank set is SVD hard thresholding followed by
the count-normalized pseudo-inverse of the lifting; interleaving that
projection with the diffusion sampler's corrector cycle gives the SVD variant
of the reconstruction loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kspace import as_multicoil
from .prior import NoiseSchedule
from .sampler import SamplerConfig, _pc_reconstruct
from .weighting import WeightMap

__all__ = [
    "HankelSpec",
    "default_rank",
    "hankel_forward",
    "hankel_pinv",
    "svd_hard_threshold",
    "sake_project",
    "reconstruct_svd_wkgm",
]


def default_rank(coils: int, window: int) -> int:
    """Half the column count of the lifted matrix, floored, at least 1."""
    return max(1, coils * window * window // 2)


@dataclass(frozen=True)
class HankelSpec:
    window: int = 6
    rank: int | None = None  # None -> default_rank(coils, window) at use time

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be positive")
        if self.rank is not None and self.rank < 1:
            raise ValueError("rank must be positive")

    def effective_rank(self, coils: int) -> int:
        return self.rank if self.rank is not None else default_rank(coils, self.window)


def _check_window(shape: tuple[int, ...], window: int) -> None:
    if window > min(shape[-2], shape[-1]):
        raise ValueError(f"window {window} exceeds grid {shape[-2:]}")


def hankel_forward(kspace: np.ndarray, spec: HankelSpec) -> np.ndarray:
    """Lift multi-coil k-space to the block-Hankel matrix.

    Rows run over window positions (row-major); columns over (coil,
    in-window offset row-major) with the coil index slowest. Entry
    ``[pos, (c, off)]`` equals ``k[c, pos + off]``.
    """
    k = as_multicoil(kspace)
    _check_window(k.shape, spec.window)
    c, h, w = k.shape
    win = spec.window
    # view: [C, H-win+1, W-win+1, win, win]
    view = np.lib.stride_tricks.sliding_window_view(k, (win, win), axis=(1, 2))
    rows = (h - win + 1) * (w - win + 1)
    return np.transpose(view, (1, 2, 0, 3, 4)).reshape(rows, c * win * win)


def _entry_counts(shape: tuple[int, int], window: int) -> np.ndarray:
    """How many sliding windows cover each grid position."""

    def axis_counts(n: int) -> np.ndarray:
        i = np.arange(n)
        lo = np.maximum(0, i - window + 1)
        hi = np.minimum(i, n - window)
        return (hi - lo + 1).astype(np.float64)

    return np.outer(axis_counts(shape[0]), axis_counts(shape[1]))


def hankel_pinv(matrix: np.ndarray, spec: HankelSpec, shape: tuple[int, int, int]) -> np.ndarray:
    """Map a lifted matrix back to k-space by averaging all referencing cells.

    This is the least-squares pseudo-inverse of :func:`hankel_forward`. The
    average is computed as ``base + mean(cell - base)`` with one designated
    representative cell per entry, so lifting and immediately un-lifting is
    exact, not merely close.
    """
    c, h, w = shape
    win = spec.window
    _check_window((c, h, w), win)
    rows, cols = (h - win + 1) * (w - win + 1), c * win * win
    a = np.asarray(matrix)
    if a.shape != (rows, cols):
        raise ValueError(f"matrix {a.shape} inconsistent with spec/shape (want {(rows, cols)})")
    a = a.reshape(h - win + 1, w - win + 1, c, win, win)

    ii = np.arange(h)[:, None].repeat(w, axis=1)
    jj = np.arange(w)[None, :].repeat(h, axis=0)
    pi, pj = np.minimum(ii, h - win), np.minimum(jj, w - win)  # representative window
    di, dj = ii - pi, jj - pj
    base = a[pi, pj, :, di, dj]  # [H, W, C]

    diff = np.zeros((h, w, c), dtype=a.dtype)
    for oi in range(win):
        for oj in range(win):
            cells = a[:, :, :, oi, oj]  # window positions [H', W', C]
            rep = base[oi : oi + h - win + 1, oj : oj + w - win + 1]
            diff[oi : oi + h - win + 1, oj : oj + w - win + 1] += cells - rep
    counts = _entry_counts((h, w), win)[:, :, None]
    return np.transpose(base + diff / counts, (2, 0, 1))


def svd_hard_threshold(matrix: np.ndarray, rank: int) -> np.ndarray:
    """Best rank-``rank`` approximation: keep the largest singular values."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    a = np.asarray(matrix)
    if rank >= min(a.shape):
        return a.copy()
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return (u[:, :rank] * s[:rank]) @ vh[:rank]


def sake_project(kspace: np.ndarray, spec: HankelSpec) -> np.ndarray:
    """Project multi-coil k-space toward the low-rank Hankel set.

    Lift, hard-threshold the singular values, un-lift. A rank at or above the
    lifted matrix's minimum dimension short-circuits to the identity.
    """
    k = as_multicoil(kspace)
    c, h, w = k.shape
    win = spec.window
    _check_window(k.shape, win)
    rank = spec.effective_rank(c)
    rows, cols = (h - win + 1) * (w - win + 1), c * win * win
    if rank >= min(rows, cols):
        return k.copy()
    return hankel_pinv(svd_hard_threshold(hankel_forward(k, spec), rank), spec, (c, h, w))


def reconstruct_svd_wkgm(
    measured: np.ndarray,
    mask: np.ndarray,
    model,
    wmap: WeightMap,
    schedule: NoiseSchedule | None = None,
    config: SamplerConfig = SamplerConfig(),
    spec: HankelSpec = HankelSpec(),
    on_iteration: Callable[[int, np.ndarray], None] | None = None,
    rngs: Sequence[np.random.Generator] | None = None,
) -> np.ndarray:
    """Reconstruction loop with the low-rank projection in the corrector cycle.

    Identical to :func:`wkgm.sampler.reconstruct_wkgm` except that after each
    corrector's weight removal and channel collapse, all coils are jointly
    projected by :func:`sake_project` before data consistency is enforced.
    Consumes the same random streams as the plain loop, so a full-rank spec
    reproduces it exactly.
    """
    return _pc_reconstruct(
        measured, mask, model, wmap, schedule, config,
        project=lambda k: sake_project(k, spec),
        on_iteration=on_iteration, rngs=rngs,
    )
