"""
t2net command-line entry point.

Sub-commands:
    gen-data   simulate a phantom dataset directory
    train      train on a dataset, write checkpoint + loss log
    eval       metric table of a checkpoint on a dataset
    ablate     train and compare w/o Rec, w/o H^tt and the full network
    error-map  PGM images of one slice and its SR error

Exit codes: 0 success, 2 bad arguments, 3 bad artifact file, 4 numeric failure,
1 any other error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

load_dotenv()

from t2net.config import settings  # noqa: E402
from t2net.configs.loader import DEFAULT_PRESET, load_config  # noqa: E402
from t2net.errors import (  # noqa: E402
    ArtifactFormatError,
    DimensionError,
    ParameterError,
    T2NetError,
)
from t2net.io.images import error_map, to_uint8, write_pgm, write_png  # noqa: E402
from t2net.io.sidecar import dump_sidecar, write_sidecar  # noqa: E402
from t2net.models.configs import TrainConfig, Variant  # noqa: E402
from t2net.mri.dataset import (  # noqa: E402
    DatasetSpec,
    dataset_checksum,
    generate_dataset,
    load_dataset,
    read_sample,
    simulate_slices,
)
from t2net.mri.sample import SampleTriple  # noqa: E402
from t2net.network.params import load_params, save_params  # noqa: E402
from t2net.network.t2net import t2net_forward  # noqa: E402
from t2net.training.ablation import ablation_trend, format_ablation, run_ablation  # noqa: E402
from t2net.training.evaluate import (  # noqa: E402
    evaluate,
    evaluation_record,
    format_evaluation,
)
from t2net.training.trainer import train  # noqa: E402

logger = logging.getLogger("t2net")

IDENTITY_TOLERANCE = 1e-5


def _print_config(title: str, values: dict) -> None:
    print(dump_sidecar(values, header=title), end="")
    logger.info("%s: %s", title, values)


def log_path(checkpoint: Path | str) -> Path:
    return Path(f"{checkpoint}.log.csv")


# ── gen-data ─────────────────────────────────────────────────────────────


def verify_dataset(
    paths: Sequence[Path],
    expected: Sequence[SampleTriple],
    spec: DatasetSpec,
) -> None:
    """Re-read every slice and compare it with a fresh simulation.

    At acceleration 1 and scale 1 the network input must also equal the SR target.
    """
    for path, original in zip(paths, expected):
        loaded = read_sample(path)
        for field in ("input_lr", "target_rec", "target_sr"):
            a = getattr(original, field).data.astype(np.float32)
            b = getattr(loaded, field).data
            if a.shape != b.shape or not np.array_equal(a, b):
                raise ArtifactFormatError(f"{path}: '{field}' did not round-trip")
        if spec.acceleration == 1.0 and spec.scale == 1:
            gap = float(np.max(np.abs(loaded.input_lr.data - loaded.target_sr.data)))
            if gap > IDENTITY_TOLERANCE:
                raise ArtifactFormatError(f"{path}: input_lr differs from target_sr by {gap:.3g}")
    print(f"verified {len(paths)} slices")


def cmd_gen_data(args: argparse.Namespace) -> int:
    spec = DatasetSpec(
        slices=args.slices,
        size=args.size,
        scale=args.scale,
        acceleration=args.accel,
        center_fraction=args.center_frac,
        seed=args.seed,
        phantom=args.phantom,
    )
    _print_config("gen-data", {"out": str(args.out), **spec.model_dump()})
    paths = generate_dataset(args.out, spec, threads=args.threads or settings.threads)
    if args.verify:
        verify_dataset(paths, simulate_slices(spec), spec)
    print(f"wrote {len(paths)} slices to {args.out}")
    print(f"checksum {dataset_checksum(args.out)}")
    return 0


# ── train / eval / ablate ────────────────────────────────────────────────


def _overrides(args: argparse.Namespace) -> dict:
    keys = (
        "steps", "epochs", "lr", "batch", "seed", "eval_every", "variant", "n_stages", "channels"
    )
    return {k: getattr(args, k, None) for k in keys}


def _load_nonempty(directory: Path) -> list[SampleTriple]:
    dataset = load_dataset(directory)
    if not dataset:
        raise ParameterError(f"dataset {directory} has no slices")
    return dataset


def _load_training_data(directory: Path, cfg: TrainConfig) -> list[SampleTriple]:
    dataset = _load_nonempty(directory)
    if dataset[0].scale != cfg.model.scale:
        raise DimensionError(
            f"dataset scale {dataset[0].scale} does not match model scale {cfg.model.scale}"
        )
    return dataset


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    _print_config("train", {"data": str(args.data), "out": str(args.out), **cfg.to_flat()})
    dataset = _load_training_data(args.data, cfg)
    params, log = train(dataset, cfg)
    ckpt = save_params(args.out, params)
    log_path(ckpt).write_text(log.to_csv(), encoding="utf-8")
    print(f"loss {log.initial_loss:.6f} -> {log.final_loss:.6f} over {len(log.steps)} steps")
    print(f"checkpoint {ckpt}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    params = load_params(args.ckpt)
    _print_config(
        "eval",
        {"data": str(args.data), "ckpt": str(args.ckpt), **params.config.model_dump(mode="json")},
    )
    dataset = _load_nonempty(args.data)
    report = evaluate(params, dataset, threads=args.threads)
    print(format_evaluation(report))
    if args.record:
        write_sidecar(args.record, evaluation_record(report, str(args.data)), header="t2net eval")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    _print_config("ablate", {"data": str(args.data), **cfg.to_flat()})
    dataset = _load_training_data(args.data, cfg)
    rows = run_ablation(dataset, cfg)
    print(format_ablation(rows))
    trend = ablation_trend(rows)
    status = "FAIL" if trend.failed else ("ok" if trend.expected_order else "unexpected order")
    psnrs = ", ".join(f"{k}={v:.3f}" for k, v in trend.sr_psnr.items())
    print(f"trend (full >= no_tt >= no_rec): {status} [{psnrs}]")
    return 0


# ── error-map ────────────────────────────────────────────────────────────


def cmd_error_map(args: argparse.Namespace) -> int:
    params = load_params(args.ckpt)
    _print_config(
        "error-map",
        {
            "ckpt": str(args.ckpt),
            "sample": str(args.sample),
            "out": str(args.out),
            **params.config.model_dump(mode="json"),
        },
    )
    sample = read_sample(args.sample)
    x_sr, x_rec = t2net_forward(sample.input_lr, params)
    emap = error_map(x_sr.data, sample.target_sr.data)
    images = {
        "input": to_uint8(sample.input_lr.data),
        "sr": to_uint8(x_sr.data),
        "target": to_uint8(sample.target_sr.data),
        "err": emap.pixels,
    }
    if x_rec is not None:
        images["rec"] = to_uint8(x_rec.data)
    for suffix, pixels in images.items():
        write_pgm(f"{args.out}_{suffix}.pgm", pixels)
        if args.png:
            write_png(f"{args.out}_{suffix}.png", pixels)
    print(f"error scale {emap.scale!r} (pixel = |x' - x| * scale)")
    return 0


# ── Parser ───────────────────────────────────────────────────────────────


def _add_train_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=DEFAULT_PRESET, help="preset name or config file")
    p.add_argument("--steps", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int, help="evaluate every N steps")
    p.add_argument("--n-stages", dest="n_stages", type=int)
    p.add_argument("--channels", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t2net",
        description="Joint MRI reconstruction and super-resolution with task transformers",
    )
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="simulate a phantom dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--slices", type=int, default=16)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--accel", type=float, default=6.0)
    p.add_argument("--center-frac", dest="center_frac", type=float, default=0.0625)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phantom", choices=["random", "shepp_logan"], default="random")
    p.add_argument("--threads", type=int)
    p.add_argument("--verify", action="store_true", help="re-read and check every slice")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a network")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--variant", choices=[v.value for v in Variant])
    _add_train_overrides(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--record", type=Path, help="also write a key/value metrics record")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="compare w/o Rec, w/o H^tt and the full network")
    p.add_argument("--data", type=Path, required=True)
    _add_train_overrides(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("error-map", help="write PGM images and the SR error map of one slice")
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--sample", type=Path, required=True)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--png", action="store_true", help="also write PNG copies")
    p.set_defaults(func=cmd_error_map)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or settings.log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except T2NetError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (FileNotFoundError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
