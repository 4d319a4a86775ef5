"""Command-line surface.

Subcommands: mask, phantom, train, recon, metrics. Each effective parameter
set is resolved as built-in defaults < --config file < explicit flags, and is
echoed (with package/library versions) to ``run.json`` next to the primary
output, so any run can be reproduced byte-for-byte from its own record.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .hankel import HankelSpec, reconstruct_svd_wkgm
from .kspace import apply_mask, sos_combine
from .masks import MaskSpec, generate_mask
from .metrics import psnr, ssim
from .phantoms import PhantomSpec, make_phantom
from .prior import GaussianOracle, augment6, geometric_schedule
from .sampler import NumericalError, SamplerConfig, reconstruct_wkgm
from .weighting import apply_weight, build_weight

__all__ = ["main", "entry"]


class CliError(ValueError):
    pass


DEFAULTS: dict[str, dict] = {
    "mask": {
        "pattern": "poisson-disc-2d", "shape": "256x256", "accel": 4.0,
        "acs": 0, "seed": 0, "out": None,
    },
    "phantom": {
        "kind": "ellipses", "size": "64x64", "coils": 1, "seed": 0,
        "components": 2, "out": None, "kspace": None,
    },
    "train": {
        "arch": "conv", "train_size": 32, "size": "32x32", "epochs": 40,
        "batch": 8, "lr": 1e-3, "hidden": 32, "depth": 4, "seed": 0,
        "weight_r": 0.02, "weight_p": 0.5,
        "sigma_min": 0.01, "sigma_max": 1.0, "N": 1000,
        "oracle_kspace": None, "oracle_sigma_d": 0.05, "out": None,
    },
    "recon": {
        "method": "wkgm", "kspace": None, "mask": None, "model": None,
        "N": 1000, "M": 1, "snr": 0.075, "lambda_dc": math.inf, "seed": 0,
        "weight_r": None, "weight_p": None,
        "hankel_window": 6, "hankel_rank": None,
        "out": None, "sos_out": None,
    },
    "metrics": {"ref": None, "test": None, "json": False, "out": None},
}


def _parse_shape(text: str) -> tuple[int, int]:
    try:
        h, w = (int(p) for p in text.lower().split("x"))
    except ValueError:
        raise CliError(f"bad shape {text!r}; expected HxW like 64x64") from None
    return h, w


def _build_parser() -> argparse.ArgumentParser:
    class Parser(argparse.ArgumentParser):
        def error(self, message):  # argparse exits 2 by default; remap to validation
            raise CliError(message)

    p = Parser(prog="wkgm", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, **kwargs) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, **kwargs)
        sp.add_argument("--config", help="JSON file of parameters (e.g. an emitted run.json)")
        return sp

    sp = add("mask", help="generate an undersampling mask")
    sp.add_argument("--pattern", choices=("cartesian1d", "uniform-random-2d", "poisson-disc-2d"))
    sp.add_argument("--shape")
    sp.add_argument("--accel", type=float)
    sp.add_argument("--acs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = add("phantom", help="generate a synthetic phantom")
    sp.add_argument("--kind", choices=("ellipses", "exponentials"))
    sp.add_argument("--size")
    sp.add_argument("--coils", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--components", type=int)
    sp.add_argument("--out", help="ground-truth .img path")
    sp.add_argument("--kspace", help="multi-coil .wksp path")

    sp = add("train", help="train the score prior (or build a Gaussian oracle model)")
    sp.add_argument("--arch", choices=("conv", "gaussian-oracle"))
    sp.add_argument("--train-size", type=int, dest="train_size")
    sp.add_argument("--size")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--hidden", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--weight-r", type=float, dest="weight_r")
    sp.add_argument("--weight-p", type=float, dest="weight_p")
    sp.add_argument("--sigma-min", type=float, dest="sigma_min")
    sp.add_argument("--sigma-max", type=float, dest="sigma_max")
    sp.add_argument("--N", type=int, dest="N")
    sp.add_argument("--oracle-kspace", dest="oracle_kspace")
    sp.add_argument("--oracle-sigma-d", type=float, dest="oracle_sigma_d")
    sp.add_argument("--out")

    sp = add("recon", help="reconstruct undersampled k-space")
    sp.add_argument("--method", choices=("wkgm", "svd-wkgm"))
    sp.add_argument("--kspace")
    sp.add_argument("--mask")
    sp.add_argument("--model")
    sp.add_argument("--N", type=int, dest="N")
    sp.add_argument("--M", type=int, dest="M")
    sp.add_argument("--snr", type=float)
    sp.add_argument("--lambda-dc", type=float, dest="lambda_dc")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--weight-r", type=float, dest="weight_r")
    sp.add_argument("--weight-p", type=float, dest="weight_p")
    sp.add_argument("--hankel-window", type=int, dest="hankel_window")
    sp.add_argument("--hankel-rank", type=int, dest="hankel_rank")
    sp.add_argument("--out", help="reconstructed .wksp path")
    sp.add_argument("--sos-out", dest="sos_out", help=".pgm preview path; a raw .img dump is written beside it")

    sp = add("metrics", help="compare two .img files")
    sp.add_argument("--ref")
    sp.add_argument("--test")
    sp.add_argument("--json", action="store_true", default=None)
    sp.add_argument("--out", help="optional report path")
    return p


def _effective_params(command: str, args: argparse.Namespace) -> dict:
    params = dict(DEFAULTS[command])
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        if "params" in loaded and isinstance(loaded["params"], dict):
            if loaded.get("command", command) != command:
                raise CliError(
                    f"config file records command {loaded['command']!r}, not {command!r}"
                )
            loaded = loaded["params"]
        unknown = set(loaded) - set(params)
        if unknown:
            raise CliError(f"unknown config keys for {command}: {sorted(unknown)}")
        params.update(loaded)
    for key in params:
        flag = getattr(args, key, None)
        if flag is not None:
            params[key] = flag
    return params


def _write_run_record(command: str, params: dict, anchor: str | None) -> None:
    if not anchor:
        return
    versions = {"wkgm": __version__, "numpy": np.__version__, "python": sys.version.split()[0]}
    record = {
        "command": command,
        "params": params,
        "seed": params.get("seed"),
        "versions": versions,
    }
    out = Path(anchor).resolve().parent / "run.json"
    out.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _require(params: dict, *keys: str) -> None:
    missing = [k for k in keys if params[k] in (None, "")]
    if missing:
        raise CliError(f"missing required parameter(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _cmd_mask(params: dict) -> None:
    _require(params, "out", "pattern", "accel")
    shape = _parse_shape(params["shape"])
    spec = MaskSpec(params["pattern"], params["accel"], params["acs"], params["seed"])
    io.write_mask(params["out"], generate_mask(spec, shape))


def _cmd_phantom(params: dict) -> None:
    _require(params, "out", "kspace")
    spec = PhantomSpec(
        params["kind"], _parse_shape(params["size"]), params["coils"],
        params["seed"], params["components"],
    )
    gt, k = make_phantom(spec)
    io.write_image(params["out"], gt)
    io.write_kspace(params["kspace"], k)


def _normalized(k: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.abs(k).max())
    if scale == 0:
        raise CliError("k-space is identically zero")
    return k / scale, scale


def _training_set(params: dict, wmap) -> np.ndarray:
    h, w = _parse_shape(params["size"])
    tensors = []
    for i in range(params["train_size"]):
        _, k = make_phantom(PhantomSpec("ellipses", (h, w), 1, params["seed"] * 100003 + i))
        k_norm, _ = _normalized(k[0])
        tensors.append(augment6(apply_weight(k_norm, wmap)))
    return np.stack(tensors)


def _cmd_train(params: dict) -> None:
    _require(params, "out")
    schedule = geometric_schedule(params["sigma_min"], params["sigma_max"], params["N"])
    wmap_params = (params["weight_r"], params["weight_p"])
    if params["arch"] == "gaussian-oracle":
        _require(params, "oracle_kspace")
        k = io.read_kspace(params["oracle_kspace"])
        wmap = build_weight(k.shape[-2:], *wmap_params)
        k_norm, _ = _normalized(k)
        mean = augment6(apply_weight(k_norm, wmap))
        model = GaussianOracle(
            mean=mean, variance=params["oracle_sigma_d"] ** 2,
            cutoff=wmap.cutoff, smoothness=wmap.smoothness, schedule=schedule,
        )
    else:
        from .scorenet import TrainingConfig, train_score

        wmap = build_weight(_parse_shape(params["size"]), *wmap_params)
        dataset = _training_set(params, wmap)
        cfg = TrainingConfig(
            epochs=params["epochs"], batch_size=params["batch"], lr=params["lr"],
            seed=params["seed"], hidden=params["hidden"], depth=params["depth"],
        )
        model = train_score(dataset, schedule, cfg, wmap.cutoff, wmap.smoothness)
    io.save_model(params["out"], model)


def _cmd_recon(params: dict) -> None:
    _require(params, "kspace", "mask", "model", "out")
    y = io.read_kspace(params["kspace"])
    mask = io.read_mask(params["mask"])
    if y.shape[-2:] != mask.shape:
        raise CliError(f"shape mismatch: k-space {y.shape} vs mask {mask.shape}")
    model = io.load_model(params["model"])
    for flag, attr in (("weight_r", "cutoff"), ("weight_p", "smoothness")):
        if params[flag] is not None and not math.isclose(params[flag], getattr(model, attr)):
            raise CliError(
                f"--{flag.replace('_', '-')}={params[flag]} conflicts with model {attr}={getattr(model, attr)}"
            )
    wmap = build_weight(y.shape[-2:], model.cutoff, model.smoothness)
    schedule = geometric_schedule(model.schedule.sigma_min, model.schedule.sigma_max, params["N"])
    config = SamplerConfig(
        n_steps=params["N"], corrector_steps=params["M"], snr=params["snr"],
        lam_dc=params["lambda_dc"], seed=params["seed"],
    )
    y_norm, scale = _normalized(apply_mask(y, mask))
    if params["method"] == "svd-wkgm":
        spec = HankelSpec(window=params["hankel_window"], rank=params["hankel_rank"])
        k = reconstruct_svd_wkgm(y_norm, mask, model, wmap, schedule, config, spec)
    else:
        k = reconstruct_wkgm(y_norm, mask, model, wmap, schedule, config)
    io.write_kspace(params["out"], k * scale)
    if params["sos_out"]:
        img = sos_combine(k * scale)
        io.write_pgm(params["sos_out"], img)
        io.write_image(Path(params["sos_out"]).with_suffix(".img"), img)


def _cmd_metrics(params: dict) -> None:
    _require(params, "ref", "test")
    ref = io.read_image(params["ref"])
    test = io.read_image(params["test"])
    report = {"psnr": psnr(ref, test), "ssim": ssim(ref, test)}
    if params["json"]:
        print(json.dumps(report))
    else:
        print(f"psnr={report['psnr']:.4f} dB  ssim={report['ssim']:.6f}")
    if params["out"]:
        Path(params["out"]).write_text(json.dumps(report) + "\n")


_COMMANDS = {
    "mask": (_cmd_mask, "out"),
    "phantom": (_cmd_phantom, "out"),
    "train": (_cmd_train, "out"),
    "recon": (_cmd_recon, "out"),
    "metrics": (_cmd_metrics, "out"),
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        command = args.command
        params = _effective_params(command, args)
        handler, anchor_key = _COMMANDS[command]
        handler(params)
        _write_run_record(command, params, params.get(anchor_key))
        return 0
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
