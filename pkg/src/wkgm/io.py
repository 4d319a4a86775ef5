"""Binary container formats.

All integers are little-endian uint32 unless noted; all floating payloads are
little-endian float32.

.wksp  k-space      magic "WKSP" | version | C | H | W | C*H*W complex
                    entries as (real, imag) float32 pairs, row-major, coil
                    slowest.
.wmsk  mask         magic "WMSK" | version | H | W | H*W bytes in {0, 1}.
.img   real image   magic "WIMG" | version | H | W | H*W float32 (16-byte
                    header).
.wkgm  score model  magic "WKGM" | version | architecture string | schedule
                    (sigma_min, sigma_max float64; N) | weighting (cutoff,
                    smoothness float64) | architecture-specific payload with
                    parameters as float32. The "gaussian-oracle" architecture
                    stores (mean, variance) instead of network weights.

PGM previews are 16-bit binary (P5, maxval 65535), max-normalized.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .prior import GaussianOracle, NoiseSchedule, geometric_schedule

__all__ = [
    "ContainerFormatError",
    "read_kspace",
    "write_kspace",
    "read_mask",
    "write_mask",
    "read_image",
    "write_image",
    "write_pgm",
    "save_model",
    "load_model",
]

VERSION = 1


class ContainerFormatError(ValueError):
    """Corrupt or mismatched container contents."""


def _read_header(data: bytes, magic: bytes, n_dims: int, path) -> tuple[tuple[int, ...], int]:
    head = 4 + 4 * (1 + n_dims)
    if len(data) < head or data[:4] != magic:
        raise ContainerFormatError(f"{path}: not a {magic.decode()} container")
    fields = struct.unpack_from(f"<{1 + n_dims}I", data, 4)
    if fields[0] != VERSION:
        raise ContainerFormatError(f"{path}: unsupported version {fields[0]}")
    return fields[1:], head


def write_kspace(path, kspace: np.ndarray) -> None:
    k = np.asarray(kspace, dtype=np.complex128)
    if k.ndim == 2:
        k = k[None]
    if k.ndim != 3:
        raise ValueError(f"expected [C, H, W] k-space, got {k.shape}")
    c, h, w = k.shape
    payload = k.astype("<c8").tobytes()
    Path(path).write_bytes(b"WKSP" + struct.pack("<4I", VERSION, c, h, w) + payload)


def read_kspace(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (c, h, w), off = _read_header(data, b"WKSP", 3, path)
    want = c * h * w * 8
    if len(data) - off != want:
        raise ContainerFormatError(f"{path}: payload size {len(data) - off} != expected {want}")
    k = np.frombuffer(data, dtype="<c8", offset=off).reshape(c, h, w).astype(np.complex128)
    if not np.isfinite(k.view(np.float64)).all():
        raise ContainerFormatError(f"{path}: non-finite k-space entries")
    return k


def write_mask(path, mask: np.ndarray) -> None:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError(f"expected [H, W] mask, got {m.shape}")
    h, w = m.shape
    payload = (m != 0).astype(np.uint8).tobytes()
    Path(path).write_bytes(b"WMSK" + struct.pack("<3I", VERSION, h, w) + payload)


def read_mask(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (h, w), off = _read_header(data, b"WMSK", 2, path)
    if len(data) - off != h * w:
        raise ContainerFormatError(f"{path}: payload size mismatch")
    m = np.frombuffer(data, dtype=np.uint8, offset=off).reshape(h, w)
    if not np.isin(m, (0, 1)).all():
        raise ContainerFormatError(f"{path}: mask entries outside {{0, 1}}")
    return m.copy()


def write_image(path, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected [H, W] image, got {img.shape}")
    h, w = img.shape
    Path(path).write_bytes(
        b"WIMG" + struct.pack("<3I", VERSION, h, w) + img.astype("<f4").tobytes()
    )


def read_image(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (h, w), off = _read_header(data, b"WIMG", 2, path)
    if len(data) - off != h * w * 4:
        raise ContainerFormatError(f"{path}: payload size mismatch")
    return np.frombuffer(data, dtype="<f4", offset=off).reshape(h, w).astype(np.float64)


def write_pgm(path, image: np.ndarray) -> None:
    """16-bit grayscale preview, max-normalized (all-zero images stay zero)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected [H, W] image, got {img.shape}")
    peak = img.max()
    scaled = np.zeros_like(img) if peak <= 0 else np.clip(img, 0, None) / peak
    pixels = np.round(scaled * 65535).astype(">u2")
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n65535\n".encode() + pixels.tobytes())


def _pack_str(s: str) -> bytes:
    raw = s.encode()
    return struct.pack("<I", len(raw)) + raw


def _common_header(arch: str, schedule: NoiseSchedule, cutoff: float, smoothness: float) -> bytes:
    return (
        b"WKGM"
        + struct.pack("<I", VERSION)
        + _pack_str(arch)
        + struct.pack("<ddI", schedule.sigma_min, schedule.sigma_max, schedule.n)
        + struct.pack("<dd", cutoff, smoothness)
    )


def save_model(path, model) -> None:
    """Serialize a trained conv estimator or a Gaussian oracle."""
    if isinstance(model, GaussianOracle):
        mean = model.mean
        stacked = mean if mean.ndim == 4 else mean[None]
        payload = struct.pack(
            "<d5I", model.variance, int(mean.ndim == 4), *stacked.shape
        ) + stacked.astype("<f4").tobytes()
        blob = _common_header("gaussian-oracle", model.schedule, model.cutoff, model.smoothness) + payload
        Path(path).write_bytes(blob)
        return
    # conv estimator; import lazily so oracle-only pipelines never load torch
    from .scorenet import ConvScoreEstimator

    if not isinstance(model, ConvScoreEstimator):
        raise ValueError(f"cannot serialize model of type {type(model).__name__}")
    net = model.net
    params = model.parameter_bytes()
    payload = (
        struct.pack("<5I", net.channels, net.hidden, net.depth, net.emb_dim, net.kernel)
        + struct.pack("<Q", len(params) // 4)
        + params
    )
    blob = _common_header("conv-v1", model.schedule, model.cutoff, model.smoothness) + payload
    Path(path).write_bytes(blob)


def load_model(path):
    """Load a .wkgm model file; returns a ConvScoreEstimator or GaussianOracle."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"WKGM":
        raise ContainerFormatError(f"{path}: not a WKGM model file")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise ContainerFormatError(f"{path}: unsupported version {version}")
    (slen,) = struct.unpack_from("<I", data, 8)
    arch = data[12 : 12 + slen].decode()
    off = 12 + slen
    sigma_min, sigma_max, n = struct.unpack_from("<ddI", data, off)
    off += 20
    cutoff, smoothness = struct.unpack_from("<dd", data, off)
    off += 16
    schedule = geometric_schedule(sigma_min, sigma_max, n)

    if arch == "gaussian-oracle":
        variance, batched, b, ch, h, w = struct.unpack_from("<d5I", data, off)
        off += 28
        mean = np.frombuffer(data, dtype="<f4", offset=off, count=b * ch * h * w)
        mean = mean.reshape(b, ch, h, w).astype(np.float64)
        if not batched:
            mean = mean[0]
        return GaussianOracle(
            mean=mean, variance=variance, cutoff=cutoff, smoothness=smoothness, schedule=schedule
        )
    if arch == "conv-v1":
        from . import scorenet
        import torch

        channels, hidden, depth, emb_dim, kernel = struct.unpack_from("<5I", data, off)
        off += 20
        (count,) = struct.unpack_from("<Q", data, off)
        off += 8
        flat = np.frombuffer(data, dtype="<f4", offset=off, count=count).astype(np.float64)
        net = scorenet.ConvScoreNet(channels, hidden, depth, emb_dim, kernel)
        state = net.state_dict()
        pos = 0
        for key, tensor in state.items():
            nelem = tensor.numel()
            state[key] = torch.from_numpy(flat[pos : pos + nelem].reshape(tuple(tensor.shape)).copy())
            pos += nelem
        if pos != count:
            raise ContainerFormatError(f"{path}: parameter count mismatch ({pos} vs {count})")
        net.load_state_dict(state)
        return scorenet.ConvScoreEstimator(net, schedule, cutoff, smoothness)
    raise ContainerFormatError(f"{path}: unknown architecture {arch!r}")
