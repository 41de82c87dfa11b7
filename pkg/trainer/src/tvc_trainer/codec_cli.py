"""Subprocess bridge to the codec CLI (encode --dump-aux, nn-eval)."""

from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from .nnwf import read_nnwf, write_nnwf


def default_codec_cmd() -> list[str]:
    env = os.environ.get("TVC_CLI")
    if env:
        return env.split()
    return [sys.executable, "-m", "tvc"]


class CodecError(RuntimeError):
    pass


def run_codec(cmd: list[str], args: list[str], what: str) -> None:
    proc = subprocess.run(
        cmd + args, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True
    )
    if proc.returncode != 0:
        raise CodecError(
            f"codec invocation failed for {what} (exit {proc.returncode}): "
            f"{proc.stderr.strip()[:500]}"
        )


def encode_with_dump(
    cmd: list[str],
    yuv_path: Path,
    width: int,
    height: int,
    qp: int,
    workdir: Path,
    tag: str,
) -> dict:
    """Encode one clip at one QP and return the parsed aux manifest with
    plane arrays loaded in (keys `y.rec`, `y.pred`, `y.bs`, `y.orig` and the
    chroma equivalents per frame)."""
    dump = workdir / f"aux_{tag}"
    out = workdir / f"{tag}.tvc"
    run_codec(
        cmd,
        [
            "encode", "--input", str(yuv_path), "--width", str(width),
            "--height", str(height), "--qp", str(qp),
            "--output", str(out), "--dump-aux", str(dump),
        ],
        what=tag,
    )
    manifest_path = dump / "aux_manifest.json"
    if not manifest_path.exists():
        raise CodecError(f"no aux manifest produced for {tag}")
    manifest = json.loads(manifest_path.read_text())
    if (manifest["width"], manifest["height"]) != (width, height):
        raise CodecError(
            f"aux dump for {tag} reports {manifest['width']}x{manifest['height']}, "
            f"expected {width}x{height}"
        )
    frames = []
    for fr in manifest["frames"]:
        planes = {}
        for key, fname in fr["files"].items():
            arr = np.load(dump / fname)
            planes[key] = arr
        _check_extents(planes, width, height, tag, fr["poc"])
        frames.append(
            {"poc": fr["poc"], "qp": fr["qp"], "is_key": fr["is_key"], "planes": planes}
        )
    return {"width": width, "height": height, "frames": frames}


def _check_extents(planes: dict, width: int, height: int, tag: str, poc: int) -> None:
    want = {
        "y.rec": (height, width),
        "y.pred": (height, width),
        "y.bs": (height, width),
        "y.orig": (height, width),
        "chroma.rec": (2, height // 2, width // 2),
        "chroma.pred": (2, height // 2, width // 2),
        "chroma.bs": (height // 2, width // 2),
        "chroma.orig": (2, height // 2, width // 2),
    }
    for key, shape in want.items():
        if key not in planes:
            raise CodecError(f"{tag} frame {poc}: dump is missing plane {key}")
        if planes[key].shape != shape:
            raise CodecError(
                f"{tag} frame {poc}: plane {key} has extents "
                f"{planes[key].shape}, expected {shape}"
            )


def nn_eval(cmd: list[str], weights: Path, model: str, inputs: dict, out_path: Path,
            qp: int = 37, workdir: Path | None = None) -> dict:
    """Run the runtime's forward pass on file tensors and return the outputs."""
    workdir = workdir or out_path.parent
    in_path = workdir / (out_path.stem + "_in.nnwf")
    in_path.write_bytes(write_nnwf(inputs))
    weight_flag = "--cnnlf-weights" if model in ("luma", "chroma") else "--nn-intra-weights"
    run_codec(
        cmd,
        [
            "nn-eval", "--model", model, weight_flag, str(weights),
            "--qp", str(qp), "--input", str(in_path), "--output", str(out_path),
        ],
        what=f"nn-eval {model}",
    )
    return read_nnwf(out_path.read_bytes())
