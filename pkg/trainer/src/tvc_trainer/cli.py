"""Trainer command line: dataset generation, training runs, parity checks."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .clips import gradient_clip, structured_clip
from .codec_cli import default_codec_cmd
from .datasets import Clip, build_dataset, build_intra_dataset
from .nnwf import write_nnwf
from .parity import cnnlf_parity, intra_parity
from .training import train_cnnlf, train_nnintra


def _make_clips(directory: Path, count: int, width: int, height: int,
                frames: int, seed: int, maker) -> list[Clip]:
    directory.mkdir(parents=True, exist_ok=True)
    clips = []
    for i in range(count):
        name = f"clip{i:02d}"
        path = directory / f"{name}.yuv"
        path.write_bytes(maker(width, height, frames, seed + i))
        clips.append(Clip(path=path, width=width, height=height, name=name))
    return clips


def cmd_train_cnnlf(args) -> int:
    work = Path(args.workdir)
    clips = _make_clips(
        work / "clips", args.clips, args.width, args.height, args.frames,
        args.seed, structured_clip,
    )
    samples = build_dataset(
        clips, qps=tuple(args.qps), workdir=work, kind=args.kind,
        patches_per_frame=args.patches_per_frame, base_patch=args.base_patch,
        seed=args.seed,
    )
    print(f"dataset: {len(samples)} {args.kind} samples")
    tensors, log = train_cnnlf(
        samples, epochs=args.epochs, lr=args.lr, batch=args.batch,
        channels=args.channels, blocks=args.blocks, seed=args.seed,
        dump_dir=work / "dumps",
    )
    out = Path(args.output)
    out.write_bytes(write_nnwf(tensors))
    log.save(out.with_suffix(".log.json"))
    print(f"wrote {out} ({len(tensors)} tensors); "
          f"loss switch at step {log.switch_step}")
    return 0


def cmd_train_intra(args) -> int:
    work = Path(args.workdir)
    clips = _make_clips(
        work / "clips", args.clips, args.width, args.height, args.frames,
        args.seed, gradient_clip,
    )
    w, h = (int(v) for v in args.size.split("x"))
    samples = build_intra_dataset(
        clips, (w, h), args.qp, workdir=work,
        blocks_per_frame=args.blocks_per_frame, seed=args.seed,
    )
    print(f"dataset: {len(samples)} intra samples for {w}x{h} qp{args.qp}")
    tensors, log = train_nnintra(
        samples, (w, h), args.qp, epochs=args.epochs, lr=args.lr,
        batch=args.batch, seed=args.seed, dump_dir=work / "dumps",
    )
    out = Path(args.output)
    out.write_bytes(write_nnwf(tensors))
    log.save(out.with_suffix(".log.json"))
    print(f"wrote {out} ({len(tensors)} tensors)")
    return 0


def cmd_parity(args) -> int:
    weights = Path(args.weights)
    work = weights.parent
    if args.model in ("luma", "chroma"):
        report = cnnlf_parity(
            weights, args.model, args.channels, args.blocks,
            trials=args.trials, workdir=work,
        )
    else:
        _, size, qptag = args.model.split(".")
        w, h = (int(v) for v in size.split("x"))
        report = intra_parity(
            weights, (w, h), int(qptag.removeprefix("qp")),
            trials=args.trials, workdir=work,
        )
    verdict = "PASS" if report.passed else "FAIL"
    print(json.dumps({
        "model": report.model,
        "trials": report.trials,
        "max_abs_diff": report.max_abs_diff,
        "verdict": verdict,
    }))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvc-train")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-cnnlf", help="toy loop-filter training run")
    p.add_argument("--workdir", required=True)
    p.add_argument("--output", required=True, help="NNWF output path")
    p.add_argument("--kind", choices=("luma", "chroma"), default="luma")
    p.add_argument("--clips", type=int, default=4)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--qps", type=int, nargs="+", default=[37])
    p.add_argument("--patches-per-frame", type=int, default=16)
    p.add_argument("--base-patch", type=int, default=24)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_cnnlf)

    p = sub.add_parser("train-intra", help="toy intra-predictor training run")
    p.add_argument("--workdir", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--size", default="16x16", help="<w>x<h>")
    p.add_argument("--qp", type=int, default=37)
    p.add_argument("--clips", type=int, default=4)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--frames", type=int, default=6)
    p.add_argument("--blocks-per-frame", type=int, default=24)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_intra)

    p = sub.add_parser("parity", help="runtime-vs-trainer forward agreement")
    p.add_argument("--weights", required=True)
    p.add_argument("--model", required=True, help="luma, chroma, or intra.<w>x<h>.qp<q>")
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--trials", type=int, default=25)
    p.set_defaults(func=cmd_parity)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"tvc-train {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
