"""Context-based neural intra prediction.

Eight networks cover the block sizes (w x h) 4x4, 8x4, 16x4, 32x4, 8x8,
16x8, 16x16 and 32x32.  A block's context is n_a rows of n_l + 2w samples
above it and n_l columns of 2h samples to its left, with n_a = min(h, 8)
and n_l = min(w, 8).  Context samples are mean-subtracted and scaled by
1/127; the prediction head de-normalizes with the same mean.  Two extra
4-way heads emit secondary-transform group logits; they are produced but
not consumed by the toy codec.

Context availability (for a block at (x, y), height h): a picture sample
(px, py) is available when it lies inside the picture and either py < y, or
py < y + h with px < x (raster coding order).  Unavailable positions take
the value of the nearest available sample, found by clamping py into the
coded rows first and px into the coded columns of that row; when nothing is
available (block at the picture origin) the whole context is 128.

Canonical tensor names, one model per (size, qp):
  intra.<w>x<h>.qp<q>.branch_above.conv1.weight|bias|alpha
  intra.<w>x<h>.qp<q>.branch_above.conv2.weight|bias|alpha
  intra.<w>x<h>.qp<q>.branch_left.conv1|conv2...
  intra.<w>x<h>.qp<q>.trunk.fc1.weight|bias|alpha
  intra.<w>x<h>.qp<q>.trunk.fc2.weight|bias|alpha
  intra.<w>x<h>.qp<q>.head_pred.weight|bias
  intra.<w>x<h>.qp<q>.head_grp1.weight|bias
  intra.<w>x<h>.qp<q>.head_grp2.weight|bias
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import NnwfError
from .nn_ops import conv2d, linear, prelu
from .video_io import _as_samples

__all__ = [
    "SUPPORTED_SIZES",
    "TRAINING_QPS",
    "context_dims",
    "assemble_intra_context",
    "NnIntraModel",
    "IntraModelSet",
    "nnintra_predict",
    "select_model_for_qp",
]

SUPPORTED_SIZES = ((4, 4), (8, 4), (16, 4), (32, 4), (8, 8), (16, 8), (16, 16), (32, 32))
TRAINING_QPS = (27, 32, 37, 43)


def context_dims(w: int, h: int) -> tuple[int, int]:
    """(n_a, n_l) context extents for a w x h block."""
    return min(h, 8), min(w, 8)


def _context_coords(x: int, y: int, w: int, h: int, n_a: int, n_l: int):
    above = [
        [(x - n_l + j, y - n_a + i) for j in range(n_l + 2 * w)] for i in range(n_a)
    ]
    left = [[(x - n_l + j, y + i) for j in range(n_l)] for i in range(2 * h)]
    return above, left


def assemble_intra_context(recon, rect, n_a: int, n_l: int):
    """Extract the (above, left) context of a block and its mean.

    rect is (x, y, w, h), fully inside the picture.  Returns the above
    tensor (n_a, n_l + 2w), the left tensor (2h, n_l), both mean-subtracted
    and scaled by 1/127, plus the mean of the available samples (128.0 when
    nothing is available).
    """
    pic = _as_samples(recon)
    ph, pw = pic.shape
    x, y, w, h = rect
    if x < 0 or y < 0 or x + w > pw or y + h > ph or w <= 0 or h <= 0:
        raise ValueError(f"block rect {rect} outside {pw}x{ph} picture")

    above_xy, left_xy = _context_coords(x, y, w, h, n_a, n_l)

    def available(px: int, py: int) -> bool:
        if px < 0 or py < 0 or px >= pw or py >= ph:
            return False
        return py < y or (py < y + h and px < x)

    def fetch(px: int, py: int) -> int:
        py2 = min(max(py, 0), y + h - 1)
        if py2 < y:
            return int(pic[py2, min(max(px, 0), pw - 1)])
        if x > 0:
            return int(pic[py2, min(max(px, 0), x - 1)])
        return int(pic[y - 1, min(max(px, 0), pw - 1)])

    if x == 0 and y == 0:
        mean = 128.0
        above = np.full((n_a, n_l + 2 * w), 128, dtype=np.int64)
        left = np.full((2 * h, n_l), 128, dtype=np.int64)
    else:
        total = 0
        count = 0
        for coords in (above_xy, left_xy):
            for row in coords:
                for px, py in row:
                    if available(px, py):
                        total += int(pic[py, px])
                        count += 1
        mean = total / count if count else 128.0
        above = np.array([[fetch(px, py) for px, py in row] for row in above_xy], dtype=np.int64)
        left = np.array([[fetch(px, py) for px, py in row] for row in left_xy], dtype=np.int64)

    above_n = (above - mean) / 127.0
    left_n = (left - mean) / 127.0
    return above_n, left_n, mean


_BRANCH_LAYERS = ("conv1.weight", "conv1.bias", "conv1.alpha",
                  "conv2.weight", "conv2.bias", "conv2.alpha")


@dataclass(frozen=True)
class NnIntraModel:
    """One size-and-QP-specific intra prediction network."""

    w: int
    h: int
    qp: int
    n_a: int
    n_l: int
    params: dict

    @property
    def name(self) -> str:
        return f"intra.{self.w}x{self.h}.qp{self.qp}"

    @staticmethod
    def from_params(w: int, h: int, qp: int, params: dict) -> "NnIntraModel":
        if (w, h) not in SUPPORTED_SIZES:
            raise NnwfError(f"unsupported intra block size {w}x{h}")
        n_a, n_l = context_dims(w, h)
        model = NnIntraModel(w, h, qp, n_a, n_l, dict(params))
        model._validate_shapes()
        return model

    def _validate_shapes(self):
        p = self.params
        trunk = p.get("trunk.fc1.weight")
        if trunk is None:
            raise NnwfError(f"{self.name}: missing trunk.fc1.weight")
        width = trunk.shape[0]
        feat_above = 16 * self.n_a * (self.n_l + 2 * self.w)
        feat_left = 16 * 2 * self.h * self.n_l
        expect = {
            "trunk.fc1.weight": (width, feat_above + feat_left),
            "trunk.fc1.bias": (width,),
            "trunk.fc1.alpha": (width,),
            "trunk.fc2.weight": (width, width),
            "trunk.fc2.bias": (width,),
            "trunk.fc2.alpha": (width,),
            "head_pred.weight": (self.w * self.h, width),
            "head_pred.bias": (self.w * self.h,),
            "head_grp1.weight": (4, width),
            "head_grp1.bias": (4,),
            "head_grp2.weight": (4, width),
            "head_grp2.bias": (4,),
        }
        for branch in ("branch_above", "branch_left"):
            expect[f"{branch}.conv1.weight"] = (8, 1, 3, 3)
            expect[f"{branch}.conv1.bias"] = (8,)
            expect[f"{branch}.conv1.alpha"] = (8,)
            expect[f"{branch}.conv2.weight"] = (16, 8, 3, 3)
            expect[f"{branch}.conv2.bias"] = (16,)
            expect[f"{branch}.conv2.alpha"] = (16,)
        for name, shape in expect.items():
            if name not in p:
                raise NnwfError(f"{self.name}: missing tensor {name}")
            got = np.asarray(p[name]).shape
            if got != shape:
                raise NnwfError(f"{self.name}.{name}: shape {got} != expected {shape}")


def _branch(p: dict, prefix: str, t: np.ndarray) -> np.ndarray:
    t = conv2d(t[None, :, :], p[f"{prefix}.conv1.weight"], p[f"{prefix}.conv1.bias"])
    t = prelu(t, p[f"{prefix}.conv1.alpha"])
    t = conv2d(t, p[f"{prefix}.conv2.weight"], p[f"{prefix}.conv2.bias"])
    t = prelu(t, p[f"{prefix}.conv2.alpha"])
    return t.reshape(-1)


def nnintra_predict(model: NnIntraModel, above, left, context_mean: float = 128.0):
    """Predict a block from its context.

    Returns (prediction (h, w) float in [0, 255], grp1 logits (4,),
    grp2 logits (4,)).  The prediction is unrounded.
    """
    above = np.asarray(above, dtype=np.float64)
    left = np.asarray(left, dtype=np.float64)
    if above.shape != (model.n_a, model.n_l + 2 * model.w):
        raise ValueError(
            f"above context shape {above.shape} != "
            f"({model.n_a}, {model.n_l + 2 * model.w})"
        )
    if left.shape != (2 * model.h, model.n_l):
        raise ValueError(
            f"left context shape {left.shape} != ({2 * model.h}, {model.n_l})"
        )
    p = model.params
    feats = np.concatenate([_branch(p, "branch_above", above), _branch(p, "branch_left", left)])
    t = linear(feats, p["trunk.fc1.weight"], p["trunk.fc1.bias"])
    t = np.where(t > 0, t, p["trunk.fc1.alpha"] * t)
    t = linear(t, p["trunk.fc2.weight"], p["trunk.fc2.bias"])
    t = np.where(t > 0, t, p["trunk.fc2.alpha"] * t)
    pred = linear(t, p["head_pred.weight"], p["head_pred.bias"])
    pred = np.clip(pred * 127.0 + context_mean, 0.0, 255.0).reshape(model.h, model.w)
    grp1 = linear(t, p["head_grp1.weight"], p["head_grp1.bias"])
    grp2 = linear(t, p["head_grp2.weight"], p["head_grp2.bias"])
    return pred, grp1, grp2


def select_model_for_qp(models: dict, qp: int):
    """Pick the model trained nearest to qp; ties break to the lower QP."""
    if not models:
        raise ValueError("no models to select from")
    best_qp = min(models, key=lambda q: (abs(q - qp), q))
    return models[best_qp]


@dataclass(frozen=True)
class IntraModelSet:
    """All intra models found in one weights file, grouped by size then QP."""

    by_size: dict  # (w, h) -> {qp: NnIntraModel}

    @staticmethod
    def from_tensor_map(tensors: dict) -> "IntraModelSet":
        grouped: dict = {}
        pat = re.compile(r"^intra\.(\d+)x(\d+)\.qp(\d+)\.(.+)$")
        for name, t in tensors.items():
            m = pat.match(name)
            if not m:
                continue
            w, h, qp = int(m.group(1)), int(m.group(2)), int(m.group(3))
            grouped.setdefault((w, h, qp), {})[m.group(4)] = np.asarray(t, dtype=np.float64)
        by_size: dict = {}
        for (w, h, qp), params in sorted(grouped.items()):
            by_size.setdefault((w, h), {})[qp] = NnIntraModel.from_params(w, h, qp, params)
        if not by_size:
            raise NnwfError("weights file contains no intra models")
        return IntraModelSet(by_size)

    def model_for(self, w: int, h: int, qp: int) -> NnIntraModel | None:
        per_qp = self.by_size.get((w, h))
        if not per_qp:
            return None
        return select_model_for_qp(per_qp, qp)
