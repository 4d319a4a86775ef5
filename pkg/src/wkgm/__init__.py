"""Calibration-less parallel MRI reconstruction in weighted k-space.

Undersampled multi-coil k-space is completed by reverse-diffusion sampling
with a score prior learned on weighted, channel-augmented k-space, with data
consistency enforced every iteration and an optional structured low-rank
(Hankel SVD) projection interleaved with the corrector.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .hankel import (
    HankelSpec,
    default_rank,
    hankel_forward,
    hankel_pinv,
    reconstruct_svd_wkgm,
    sake_project,
    svd_hard_threshold,
)
from .kspace import apply_mask, fft2c, ifft2c, sos_combine, zero_filled_recon
from .masks import MaskSpec, acceleration_factor, generate_mask
from .metrics import psnr, ssim
from .phantoms import PhantomSpec, coil_sensitivities, make_phantom
from .prior import (
    GaussianOracle,
    NoiseSchedule,
    augment6,
    collapse6,
    dsm_loss,
    dsm_target,
    gaussian_oracle_score,
    geometric_schedule,
    perturb,
)
from .sampler import (
    NumericalDivergenceError,
    NumericalError,
    SamplerConfig,
    corrector_step,
    data_consistency,
    langevin_step_size,
    predictor_step,
    reconstruct_wkgm,
    sample_prior,
)
from .weighting import WeightMap, apply_weight, build_weight, dynamic_range, remove_weight

_LAZY = {
    "TrainingConfig": "scorenet",
    "ConvScoreNet": "scorenet",
    "ConvScoreEstimator": "scorenet",
    "TrainingDivergedError": "scorenet",
    "train_score": "scorenet",
}


def __getattr__(name: str):
    # The trainable estimator pulls in torch; load it only when asked for.
    if name in _LAZY:
        import importlib

        module = importlib.import_module(f".{_LAZY[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
