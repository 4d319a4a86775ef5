"""Trainable noise-conditioned convolutional score estimator.

A small conv stack sized for CPU training on grids up to 64x64: SiLU
activations, noise level injected by scaling and shifting each hidden layer
with a learned embedding of log(sigma), final layer zero-initialized so the
untrained model is the zero score. The network predicts sigma * score, and
``evaluate`` divides by sigma, which keeps the regression target at unit
scale across the whole noise range.

Everything runs in float64; all randomness (init, batch order, noise draws)
derives from the numpy seed in :class:`TrainingConfig`, so training is
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .prior import NoiseSchedule, geometric_schedule
from .sampler import NumericalError

__all__ = [
    "TrainingConfig",
    "ConvScoreNet",
    "ConvScoreEstimator",
    "TrainingDivergedError",
    "train_score",
]


class TrainingDivergedError(NumericalError):
    def __init__(self, step: int, recent: list[float]):
        super().__init__(f"non-finite training loss at step {step}; recent losses: {recent}")
        self.step = step


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 40
    batch_size: int = 8
    lr: float = 1e-3
    seed: int = 0
    hidden: int = 32
    depth: int = 4      # total conv layers, 2..6
    emb_dim: int = 32
    kernel: int = 3

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 2 <= self.depth <= 6:
            raise ValueError("depth must be between 2 and 6 conv layers")


class ConvScoreNet(nn.Module):
    def __init__(self, channels: int = 6, hidden: int = 32, depth: int = 4,
                 emb_dim: int = 32, kernel: int = 3):
        super().__init__()
        self.channels, self.hidden, self.depth = channels, hidden, depth
        self.emb_dim, self.kernel = emb_dim, kernel
        pad = kernel // 2
        self.embed = nn.Sequential(nn.Linear(1, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim))
        self.conv_in = nn.Conv2d(channels, hidden, kernel, padding=pad)
        self.mids = nn.ModuleList(
            nn.Conv2d(hidden, hidden, kernel, padding=pad) for _ in range(depth - 2)
        )
        self.films = nn.ModuleList(nn.Linear(emb_dim, 2 * hidden) for _ in range(depth - 1))
        self.conv_out = nn.Conv2d(hidden, channels, kernel, padding=pad)
        nn.init.zeros_(self.conv_out.weight)
        nn.init.zeros_(self.conv_out.bias)
        self.double()

    def forward(self, x: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
        """Predict sigma * score for a [B, 6, H, W] batch; sigma is [B]."""
        emb = self.embed(torch.log(sigma)[:, None])
        act = nn.functional.silu

        def film(h, layer):
            scale, shift = self.films[layer](emb).chunk(2, dim=1)
            return h * (1.0 + scale[:, :, None, None]) + shift[:, :, None, None]

        h = film(act(self.conv_in(x)), 0)
        for i, conv in enumerate(self.mids):
            h = film(act(conv(h)), i + 1)
        return self.conv_out(h)


class ConvScoreEstimator:
    """Numpy-facing wrapper satisfying the score-model contract."""

    def __init__(self, net: ConvScoreNet, schedule: NoiseSchedule,
                 cutoff: float = 0.02, smoothness: float = 0.5):
        self.net = net
        self.schedule = schedule
        self.cutoff = cutoff
        self.smoothness = smoothness
        self.loss_history: list[float] = []

    def evaluate(self, x: np.ndarray, sigma) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 3
        if single:
            x = x[None]
        sig = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (x.shape[0],))
        if np.any(sig <= 0):
            raise ValueError("conv estimator needs sigma > 0")
        with torch.no_grad():
            raw = self.net(torch.from_numpy(x), torch.from_numpy(sig.copy()))
        out = raw.numpy() / sig[:, None, None, None]
        return out[0] if single else out

    def torch_dsm_loss(self, x0: torch.Tensor, sigma: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Differentiable batch-mean DSM loss with explicit draws.

        Numerically identical (to float rounding) to ``prior.dsm_loss`` on
        the same draws: the lambda = sigma^2 weighting cancels against the
        1/sigma scales, leaving ``mean_b sum((net(x0 + sigma z) + z)^2)``.
        """
        s4 = sigma[:, None, None, None]
        raw = self.net(x0 + s4 * z, sigma)
        return ((raw + z) ** 2).sum(dim=(1, 2, 3)).mean()

    def parameter_bytes(self) -> bytes:
        """Parameters in registration order as little-endian float32."""
        chunks = [
            p.detach().numpy().astype("<f4").tobytes()
            for p in self.net.state_dict().values()
        ]
        return b"".join(chunks)


def _torch_seed_from(rng: np.random.Generator) -> None:
    torch.manual_seed(int(rng.integers(0, 2**63 - 1)))


def train_score(
    dataset: np.ndarray,
    schedule: NoiseSchedule | None = None,
    config: TrainingConfig = TrainingConfig(),
    cutoff: float = 0.02,
    smoothness: float = 0.5,
) -> ConvScoreEstimator:
    """Train the conv estimator with denoising score matching.

    ``dataset`` is a [n, 6, H, W] stack of clean tensors. Noise scales are
    drawn uniformly over schedule indices, noise is standard normal, and the
    optimizer is Adam with betas (0.9, 0.999). Raises
    :class:`TrainingDivergedError` on a non-finite loss.
    """
    data = np.asarray(dataset, dtype=np.float64)
    if data.ndim != 4 or data.shape[0] == 0 or data.shape[1] != 6:
        raise ValueError(f"expected a nonempty [n, 6, H, W] dataset, got {data.shape}")
    if schedule is None:
        schedule = geometric_schedule()
    rng = np.random.default_rng(config.seed)
    _torch_seed_from(rng)
    net = ConvScoreNet(6, config.hidden, config.depth, config.emb_dim, config.kernel)
    model = ConvScoreEstimator(net, schedule, cutoff, smoothness)
    opt = torch.optim.Adam(net.parameters(), lr=config.lr, betas=(0.9, 0.999))

    n = data.shape[0]
    data_t = torch.from_numpy(data)
    step = 0
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            sig = schedule.sigmas[rng.integers(0, schedule.n, size=len(idx))]
            z = rng.standard_normal((len(idx), *data.shape[1:]))
            loss = model.torch_dsm_loss(
                data_t[idx], torch.from_numpy(sig), torch.from_numpy(z)
            )
            val = float(loss.detach())
            if not np.isfinite(val):
                raise TrainingDivergedError(step, model.loss_history[-5:])
            opt.zero_grad()
            loss.backward()
            opt.step()
            model.loss_history.append(val)
            step += 1
    return model
