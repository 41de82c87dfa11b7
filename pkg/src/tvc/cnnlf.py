"""QP-conditioned CNN in-loop filter: model container and forward pass.

Inputs are the reconstruction, the prediction, a boundary-strength plane,
and a constant QP plane, all normalized to [0, 1].  A head 3x3 conv feeds B
residual backbone blocks, and a tail 3x3 conv emits the restoration
residual added back onto the reconstruction.

Backbone block: 1x1 conv C->2C, PReLU at the expanded width, a 3x1 then 1x3
separable pair at 2C (even-indexed blocks dilate the pair by 2), a 1x1 conv
back to C, plus the skip connection.

Canonical tensor names, `<kind>` in {luma, chroma}, `<i>` in 0..B-1:
  <kind>.head.weight|bias
  <kind>.block<i>.expand.weight|bias
  <kind>.block<i>.act.alpha
  <kind>.block<i>.sep_v.weight|bias
  <kind>.block<i>.sep_h.weight|bias
  <kind>.block<i>.project.weight|bias
  <kind>.tail.weight|bias
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import NnwfError
from .nn_ops import conv2d, prelu

__all__ = ["CnnlfModel", "cnnlf_forward", "content_channels", "BLOCK_SUBLAYERS"]

BLOCK_SUBLAYERS = (
    "expand.weight",
    "expand.bias",
    "act.alpha",
    "sep_v.weight",
    "sep_v.bias",
    "sep_h.weight",
    "sep_h.bias",
    "project.weight",
    "project.bias",
)


def content_channels(kind: str) -> int:
    if kind == "luma":
        return 1
    if kind == "chroma":
        return 2
    raise ValueError(f"unknown plane kind {kind!r}")


@dataclass(frozen=True)
class CnnlfModel:
    """One loop-filter network (luma or chroma) as a named-tensor bundle."""

    kind: str
    channels: int
    blocks: int
    params: dict

    @staticmethod
    def from_tensor_map(tensors: dict, kind: str) -> "CnnlfModel":
        prefix = kind + "."
        params = {
            name[len(prefix) :]: np.asarray(t, dtype=np.float64)
            for name, t in tensors.items()
            if name.startswith(prefix)
        }
        if "head.weight" not in params or "tail.weight" not in params:
            raise NnwfError(f"no {kind} loop-filter model in weights file")
        channels = params["head.weight"].shape[0]
        block_ids = sorted(
            {
                int(m.group(1))
                for name in params
                if (m := re.match(r"block(\d+)\.", name))
            }
        )
        if block_ids != list(range(len(block_ids))):
            raise NnwfError(f"{kind}: block indices {block_ids} are not contiguous from 0")
        for i in block_ids:
            for sub in BLOCK_SUBLAYERS:
                if f"block{i}.{sub}" not in params:
                    raise NnwfError(f"{kind}: missing tensor block{i}.{sub}")
        model = CnnlfModel(kind, channels, len(block_ids), params)
        model._validate_shapes()
        return model

    def _validate_shapes(self):
        c = self.channels
        cc = content_channels(self.kind)
        in_ch = cc * 2 + 2
        expect = {
            "head.weight": (c, in_ch, 3, 3),
            "head.bias": (c,),
            "tail.weight": (cc, c, 3, 3),
            "tail.bias": (cc,),
        }
        for i in range(self.blocks):
            expect[f"block{i}.expand.weight"] = (2 * c, c, 1, 1)
            expect[f"block{i}.expand.bias"] = (2 * c,)
            expect[f"block{i}.act.alpha"] = (2 * c,)
            expect[f"block{i}.sep_v.weight"] = (2 * c, 2 * c, 3, 1)
            expect[f"block{i}.sep_v.bias"] = (2 * c,)
            expect[f"block{i}.sep_h.weight"] = (2 * c, 2 * c, 1, 3)
            expect[f"block{i}.sep_h.bias"] = (2 * c,)
            expect[f"block{i}.project.weight"] = (c, 2 * c, 1, 1)
            expect[f"block{i}.project.bias"] = (c,)
        for name, shape in expect.items():
            if name not in self.params:
                raise NnwfError(f"{self.kind}: missing tensor {name}")
            got = self.params[name].shape
            if got != shape:
                raise NnwfError(
                    f"{self.kind}.{name}: shape {got} != expected {shape}"
                )


def _backbone_block(x: np.ndarray, p: dict, i: int) -> np.ndarray:
    d = 2 if i % 2 == 0 else 1
    t = conv2d(x, p[f"block{i}.expand.weight"], p[f"block{i}.expand.bias"])
    t = prelu(t, p[f"block{i}.act.alpha"])
    t = conv2d(t, p[f"block{i}.sep_v.weight"], p[f"block{i}.sep_v.bias"], dilation=(d, 1))
    t = conv2d(t, p[f"block{i}.sep_h.weight"], p[f"block{i}.sep_h.bias"], dilation=(1, d))
    t = conv2d(t, p[f"block{i}.project.weight"], p[f"block{i}.project.bias"])
    return x + t


def _stack_channels(arr, expected: int, what: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[None, :, :]
    if a.ndim != 3 or a.shape[0] != expected:
        raise ValueError(f"{what}: expected {expected} plane(s), got shape {a.shape}")
    return a


def cnnlf_forward(model: CnnlfModel, rec, pred, bs, qp: int) -> np.ndarray:
    """Filter a reconstruction; returns clamped float planes in [0, 255].

    rec/pred carry 1 (luma) or 2 (chroma) planes; bs is a single plane with
    values in {0, 1, 2}; qp enters as a constant plane qp/63.  The output is
    rec plus the de-normalized residual, unrounded so callers can choose
    their own integerization.
    """
    if not 0 <= qp <= 63:
        raise ValueError(f"qp must be in [0, 63], got {qp}")
    cc = content_channels(model.kind)
    rec_c = _stack_channels(rec, cc, "rec")
    pred_c = _stack_channels(pred, cc, "pred")
    bs_c = _stack_channels(bs, 1, "bs")
    if rec_c.shape != pred_c.shape or rec_c.shape[1:] != bs_c.shape[1:]:
        raise ValueError(
            f"plane extents disagree: rec {rec_c.shape}, pred {pred_c.shape}, bs {bs_c.shape}"
        )
    h, w = rec_c.shape[1:]
    qp_plane = np.full((1, h, w), qp / 63.0, dtype=np.float64)
    x = np.concatenate([rec_c / 255.0, pred_c / 255.0, bs_c / 2.0, qp_plane], axis=0)

    p = model.params
    t = conv2d(x, p["head.weight"], p["head.bias"])
    for i in range(model.blocks):
        t = _backbone_block(t, p, i)
    residual = conv2d(t, p["tail.weight"], p["tail.bias"])
    out = np.clip(rec_c + residual * 255.0, 0.0, 255.0)
    return out[0] if cc == 1 else out
