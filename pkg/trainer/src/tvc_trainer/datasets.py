"""Dataset construction from codec reconstruction dumps.

Filter samples are aligned (rec, pred, bs, orig) patch stacks labeled with
the frame QP and a slice tag ("ai" for the key frame, "ra" for predicted
frames).  Patches are stored at twice the base extent; the small crop is
used during the MSE phase and the full extent after the loss switch.

Intra samples pair a block's L-shaped reconstruction context with the
original block, mirroring the runtime's context geometry, availability and
normalization rules.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec_cli import CodecError, default_codec_cmd, encode_with_dump
from .models import context_dims

DEFAULT_QPS = (27, 32, 37, 43)


@dataclass
class TrainSample:
    rec: np.ndarray  # (C, S, S) uint8, S = stored (doubled) extent
    pred: np.ndarray
    bs: np.ndarray  # (S, S) uint8
    orig: np.ndarray
    qp: int
    kind: str  # "luma" | "chroma"
    slice_tag: str  # "ai" | "ra"


@dataclass
class IntraSample:
    above: np.ndarray  # (n_a, n_l + 2w) float32, normalized
    left: np.ndarray  # (2h, n_l) float32, normalized
    mean: float
    target: np.ndarray  # (h, w) float32, normalized (orig - mean) / 127
    orig_block: np.ndarray  # (h, w) uint8
    qp: int


@dataclass
class Clip:
    path: Path
    width: int
    height: int
    name: str


def build_dataset(
    clips: list[Clip],
    qps=DEFAULT_QPS,
    codec_cmd: list[str] | None = None,
    workdir: Path | None = None,
    kind: str = "luma",
    patches_per_frame: int = 8,
    base_patch: int = 24,
    seed: int = 0,
) -> list[TrainSample]:
    """Encode every clip at every QP and crop aligned training patches.

    Deterministic for a fixed seed.  Returns
    len(clips) * len(qps) * frames * patches_per_frame samples.
    """
    if not clips:
        warnings.warn("build_dataset called with zero clips; returning an empty store")
        return []
    codec_cmd = codec_cmd or default_codec_cmd()
    workdir = Path(workdir) if workdir else clips[0].path.parent
    stored = 2 * base_patch
    samples: list[TrainSample] = []
    for clip in clips:
        for qp in qps:
            tag = f"{clip.name}_qp{qp}"
            try:
                dump = encode_with_dump(
                    codec_cmd, clip.path, clip.width, clip.height, qp, workdir, tag
                )
            except CodecError as exc:
                raise CodecError(f"clip {clip.name!r} qp {qp}: {exc}") from exc
            rng = np.random.default_rng([seed, qp, *clip.name.encode()])
            for fr in dump["frames"]:
                planes = fr["planes"]
                if kind == "luma":
                    h, w = planes["y.rec"].shape
                    s = stored
                else:
                    h, w = planes["chroma.rec"].shape[1:]
                    s = stored // 2
                if h < s or w < s:
                    raise CodecError(
                        f"clip {clip.name!r} qp {qp}: frame {fr['poc']} is "
                        f"{w}x{h}, too small for {s}-sample patches"
                    )
                for _ in range(patches_per_frame):
                    y0 = int(rng.integers(0, h - s + 1))
                    x0 = int(rng.integers(0, w - s + 1))
                    sl = np.s_[..., y0 : y0 + s, x0 : x0 + s]
                    grp = "y" if kind == "luma" else "chroma"
                    rec = planes[f"{grp}.rec"][sl]
                    samples.append(
                        TrainSample(
                            rec=rec.reshape((-1,) + rec.shape[-2:]).copy(),
                            pred=planes[f"{grp}.pred"][sl]
                            .reshape((-1,) + rec.shape[-2:])
                            .copy(),
                            bs=planes[f"{grp}.bs"][..., y0 : y0 + s, x0 : x0 + s].copy(),
                            orig=planes[f"{grp}.orig"][sl]
                            .reshape((-1,) + rec.shape[-2:])
                            .copy(),
                            qp=fr["qp"],
                            kind=kind,
                            slice_tag="ai" if fr["is_key"] else "ra",
                        )
                    )
    return samples


def extract_context(pic: np.ndarray, x: int, y: int, w: int, h: int):
    """L-shaped context of a block per the runtime contract.

    A sample is available when inside the picture and coded before the block
    in raster order (above the block row, or left of the block inside it);
    unavailable positions propagate the nearest available sample, and a
    block at the origin sees a constant 128 context.  Returns normalized
    (above, left, mean).
    """
    ph, pw = pic.shape
    n_a, n_l = context_dims(w, h)

    def available(px, py):
        if px < 0 or py < 0 or px >= pw or py >= ph:
            return False
        return py < y or (py < y + h and px < x)

    def fetch(px, py):
        py2 = min(max(py, 0), y + h - 1)
        if py2 < y:
            return int(pic[py2, min(max(px, 0), pw - 1)])
        if x > 0:
            return int(pic[py2, min(max(px, 0), x - 1)])
        return int(pic[y - 1, min(max(px, 0), pw - 1)])

    above_xy = [
        [(x - n_l + j, y - n_a + i) for j in range(n_l + 2 * w)] for i in range(n_a)
    ]
    left_xy = [[(x - n_l + j, y + i) for j in range(n_l)] for i in range(2 * h)]
    if x == 0 and y == 0:
        mean = 128.0
        above = np.full((n_a, n_l + 2 * w), 128.0)
        left = np.full((2 * h, n_l), 128.0)
    else:
        total, count = 0, 0
        for coords in (above_xy, left_xy):
            for row in coords:
                for px, py in row:
                    if available(px, py):
                        total += int(pic[py, px])
                        count += 1
        mean = total / count if count else 128.0
        above = np.array([[fetch(px, py) for px, py in row] for row in above_xy], float)
        left = np.array([[fetch(px, py) for px, py in row] for row in left_xy], float)
    return ((above - mean) / 127.0).astype(np.float32), (
        (left - mean) / 127.0
    ).astype(np.float32), mean


def build_intra_dataset(
    clips: list[Clip],
    size: tuple[int, int],
    qp: int,
    codec_cmd: list[str] | None = None,
    workdir: Path | None = None,
    blocks_per_frame: int = 24,
    seed: int = 0,
) -> list[IntraSample]:
    """Context/block pairs of one geometry from compressed reconstructions.

    The context comes from the reconstructed luma, the target from the
    original, both via the codec's aux dump.
    """
    if not clips:
        warnings.warn("build_intra_dataset called with zero clips")
        return []
    codec_cmd = codec_cmd or default_codec_cmd()
    workdir = Path(workdir) if workdir else clips[0].path.parent
    w, h = size
    samples: list[IntraSample] = []
    for clip in clips:
        tag = f"{clip.name}_intra_qp{qp}"
        dump = encode_with_dump(
            codec_cmd, clip.path, clip.width, clip.height, qp, workdir, tag
        )
        rng = np.random.default_rng([seed, qp, w, h, *clip.name.encode()])
        for fr in dump["frames"]:
            rec = fr["planes"]["y.rec"]
            orig = fr["planes"]["y.orig"]
            ph, pw = rec.shape
            for _ in range(blocks_per_frame):
                x = int(rng.integers(0, pw - w + 1))
                y = int(rng.integers(0, ph - h + 1))
                above, left, mean = extract_context(rec, x, y, w, h)
                block = orig[y : y + h, x : x + w]
                samples.append(
                    IntraSample(
                        above=above,
                        left=left,
                        mean=mean,
                        target=((block.astype(np.float64) - mean) / 127.0).astype(
                            np.float32
                        ),
                        orig_block=block.copy(),
                        qp=fr["qp"],
                    )
                )
    return samples
