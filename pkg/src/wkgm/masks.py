"""Undersampling mask generation.

Three pattern families, all deterministic given (spec, shape):

* ``cartesian1d``     - fully sampled rows drawn uniformly at random plus a
                        block of central calibration rows.
* ``uniform-random-2d`` - individual k-space points drawn uniformly outside a
                        central calibration square.
* ``poisson-disc-2d`` - dart throwing with a minimum-distance constraint;
                        the radius is solved by bisection to hit the target
                        density.

Every generated mask samples the DC index and the full calibration (ACS)
region. Generation fails loudly when the requested acceleration cannot be
reached within +/-15 percent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MaskSpec", "generate_mask", "acceleration_factor"]

PATTERNS = ("cartesian1d", "uniform-random-2d", "poisson-disc-2d")

# Accepted relative deviation of the achieved acceleration from the target.
ACCEL_TOLERANCE = 0.15


@dataclass(frozen=True)
class MaskSpec:
    pattern: str
    accel: float
    acs: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}; choose from {PATTERNS}")
        if self.accel <= 1.0:
            raise ValueError(f"acceleration must exceed 1, got {self.accel}")
        if self.acs < 0:
            raise ValueError("acs must be nonnegative")


def acceleration_factor(mask: np.ndarray) -> float:
    """H*W divided by the number of sampled entries."""
    m = np.asarray(mask)
    n = int(np.count_nonzero(m))
    if n == 0:
        raise ValueError("mask has no sampled entries")
    return m.size / n


def _acs_block(shape: tuple[int, int], acs: int) -> np.ndarray:
    """Centered fully sampled square of side ``acs``; DC is always included."""
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    if acs:
        r0, r1 = h // 2 - acs // 2, h // 2 + (acs + 1) // 2
        c0, c1 = w // 2 - acs // 2, w // 2 + (acs + 1) // 2
        mask[r0:r1, c0:c1] = True
    mask[h // 2, w // 2] = True
    return mask


def generate_mask(spec: MaskSpec, shape: tuple[int, int]) -> np.ndarray:
    """Generate a {0,1} sampling mask of the given shape.

    Deterministic for fixed (spec, shape). Raises ValueError when the ACS
    region does not fit or the target acceleration is infeasible.
    """
    h, w = shape
    if h < 4 or w < 4:
        raise ValueError(f"grid {shape} too small")
    if spec.pattern == "cartesian1d":
        if spec.acs > h:
            raise ValueError(f"acs={spec.acs} exceeds grid height {h}")
    elif spec.acs > min(h, w):
        raise ValueError(f"acs={spec.acs} does not fit inside grid {shape}")

    target = int(round(h * w / spec.accel))
    if target >= 0.99 * h * w:  # effectively full sampling
        return np.ones(shape, dtype=np.uint8)

    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, h, w)))
    if spec.pattern == "cartesian1d":
        mask = _cartesian_rows(spec, shape, rng)
    elif spec.pattern == "uniform-random-2d":
        mask = _uniform_points(spec, shape, target, rng)
    else:
        mask, _ = _poisson_disc(spec, shape, target, rng)

    achieved = acceleration_factor(mask)
    if abs(achieved - spec.accel) > ACCEL_TOLERANCE * spec.accel:
        raise ValueError(
            f"achieved acceleration {achieved:.2f} outside +/-15% of target {spec.accel}"
        )
    return mask.astype(np.uint8)


def _cartesian_rows(spec: MaskSpec, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    base = _acs_block(shape, spec.acs)
    base_rows = base.any(axis=1)  # ACS square widened to full rows
    base[base_rows, :] = True
    n_base = int(base_rows.sum())
    target_rows = max(1, round(h / spec.accel))
    if n_base > (1 + ACCEL_TOLERANCE) * target_rows:
        raise ValueError(
            f"acs={spec.acs} rows alone exceed the sampling budget for R={spec.accel}"
        )
    extra = target_rows - n_base
    if extra > 0:
        candidates = np.flatnonzero(~base_rows)
        chosen = rng.choice(candidates, size=extra, replace=False)
        base[chosen, :] = True
    return base


def _uniform_points(
    spec: MaskSpec, shape: tuple[int, int], target: int, rng: np.random.Generator
) -> np.ndarray:
    base = _acs_block(shape, spec.acs)
    n_base = int(base.sum())
    if n_base > (1 + ACCEL_TOLERANCE) * target:
        raise ValueError(
            f"acs={spec.acs} region alone exceeds the sampling budget for R={spec.accel}"
        )
    extra = target - n_base
    if extra > 0:
        candidates = np.flatnonzero(~base.ravel())
        chosen = rng.choice(candidates, size=extra, replace=False)
        flat = base.ravel()
        flat[chosen] = True
        base = flat.reshape(shape)
    return base


def _poisson_disc(
    spec: MaskSpec, shape: tuple[int, int], target: int, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Dart throwing with a minimum-distance constraint, returning (mask, radius).

    Achievable greedy counts are quantized by the integer lattice, so bisection
    finds the largest radius whose count still reaches the target, and the
    surplus points are thinned at random. A subset of an admissible point set
    is still admissible, so the min-distance property survives thinning.
    Points inside the ACS block are exempt from the distance constraint.
    """
    h, w = shape
    acs = _acs_block(shape, spec.acs)
    n_acs = int(acs.sum())
    if n_acs > (1 + ACCEL_TOLERANCE) * target:
        raise ValueError(
            f"acs={spec.acs} region alone exceeds the sampling budget for R={spec.accel}"
        )
    want = target - n_acs
    outside = np.argwhere(~acs)
    if want <= 0:
        return acs, 0.0
    if want > len(outside):
        raise ValueError(
            f"poisson-disc density for R={spec.accel} not reachable on grid {shape}"
        )
    # One shared candidate order makes count(radius) a fixed step function.
    order = rng.permutation(len(outside))
    candidates = outside[order]

    def throw(radius: float) -> np.ndarray:
        if radius <= 1.0:
            return candidates
        cell = radius / np.sqrt(2.0)
        gh, gw = int(np.ceil(h / cell)), int(np.ceil(w / cell))
        grid: dict[tuple[int, int], list[np.ndarray]] = {}
        accepted = []
        reach = int(np.ceil(radius / cell))
        r2 = radius * radius
        for pt in candidates:
            gi, gj = int(pt[0] / cell), int(pt[1] / cell)
            ok = True
            for ni in range(max(0, gi - reach), min(gh, gi + reach + 1)):
                for nj in range(max(0, gj - reach), min(gw, gj + reach + 1)):
                    for q in grid.get((ni, nj), ()):
                        d = pt - q
                        if d[0] * d[0] + d[1] * d[1] < r2:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if ok:
                accepted.append(pt)
                grid.setdefault((gi, gj), []).append(pt)
        return np.array(accepted)

    lo, hi = 1.0, float(max(h, w))  # count(lo) = everything, count(hi) ~ a handful
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if len(throw(mid)) >= want:
            lo = mid
        else:
            hi = mid
    pts = throw(lo)
    if len(pts) < want:
        raise ValueError(
            f"poisson-disc density for R={spec.accel} not reachable on grid {shape}"
        )
    keep = rng.choice(len(pts), size=want, replace=False)
    pts = pts[keep]
    mask = acs.copy()
    mask[pts[:, 0], pts[:, 1]] = True
    return mask, lo
