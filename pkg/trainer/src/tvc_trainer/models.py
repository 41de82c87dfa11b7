"""Torch mirrors of the runtime networks plus canonical-name export/import.

Both networks must match the inference runtime layer for layer so that
exported weights reproduce the same forward pass:

  loop filter: head 3x3 conv -> B residual blocks (1x1 expand to 2C, PReLU,
  3x1 then 1x3 separable pair with dilation 2 on even-indexed blocks, 1x1
  project back to C, skip) -> tail 3x3 conv emitting the residual that is
  added to the reconstruction.

  intra predictor: two conv branches (3x3, channels 8 then 16, PReLU),
  flatten + concat, two PReLU dense layers of width 96, then a prediction
  head (w*h) and two 4-way group-index heads.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

TRAINING_QPS = (27, 32, 37, 43)
SUPPORTED_SIZES = ((4, 4), (8, 4), (16, 4), (32, 4), (8, 8), (16, 8), (16, 16), (32, 32))


def context_dims(w: int, h: int) -> tuple[int, int]:
    return min(h, 8), min(w, 8)


def content_channels(kind: str) -> int:
    return 1 if kind == "luma" else 2


class BackboneBlock(nn.Module):
    def __init__(self, channels: int, dilated: bool):
        super().__init__()
        c = channels
        d = 2 if dilated else 1
        self.expand = nn.Conv2d(c, 2 * c, 1)
        self.act = nn.PReLU(2 * c)
        self.sep_v = nn.Conv2d(2 * c, 2 * c, (3, 1), padding=(d, 0), dilation=(d, 1))
        self.sep_h = nn.Conv2d(2 * c, 2 * c, (1, 3), padding=(0, d), dilation=(1, d))
        self.project = nn.Conv2d(2 * c, c, 1)

    def forward(self, x):
        t = self.act(self.expand(x))
        t = self.sep_h(self.sep_v(t))
        return x + self.project(t)


class CnnlfNet(nn.Module):
    """QP-conditioned restoration filter over (rec, pred, bs, qp) planes."""

    def __init__(self, kind: str, channels: int = 16, blocks: int = 4):
        super().__init__()
        self.kind = kind
        self.channels = channels
        cc = content_channels(kind)
        self.head = nn.Conv2d(cc * 2 + 2, channels, 3, padding=1)
        self.blocks = nn.ModuleList(
            BackboneBlock(channels, dilated=(i % 2 == 0)) for i in range(blocks)
        )
        self.tail = nn.Conv2d(channels, cc, 3, padding=1)
        # start as the identity filter: training improves on the unfiltered
        # reconstruction from step one
        nn.init.zeros_(self.tail.weight)
        nn.init.zeros_(self.tail.bias)

    def forward(self, rec, pred, bs, qp):
        """All inputs normalized: rec/pred in [0,1] (N,cc,H,W), bs/2 (N,1,H,W),
        qp scalar tensor or float in [0,1] units of /63.  Returns the filtered
        planes clamped to [0, 1]."""
        n, _, h, w = rec.shape
        if not torch.is_tensor(qp):
            qp = torch.full((n, 1, h, w), float(qp), dtype=rec.dtype, device=rec.device)
        x = torch.cat([rec, pred, bs, qp], dim=1)
        t = self.head(x)
        for block in self.blocks:
            t = block(t)
        return torch.clamp(rec + self.tail(t), 0.0, 1.0)

    def export_tensors(self) -> dict[str, np.ndarray]:
        k = self.kind
        out = {
            f"{k}.head.weight": _np(self.head.weight),
            f"{k}.head.bias": _np(self.head.bias),
        }
        for i, block in enumerate(self.blocks):
            p = f"{k}.block{i}."
            out[p + "expand.weight"] = _np(block.expand.weight)
            out[p + "expand.bias"] = _np(block.expand.bias)
            out[p + "act.alpha"] = _np(block.act.weight)
            out[p + "sep_v.weight"] = _np(block.sep_v.weight)
            out[p + "sep_v.bias"] = _np(block.sep_v.bias)
            out[p + "sep_h.weight"] = _np(block.sep_h.weight)
            out[p + "sep_h.bias"] = _np(block.sep_h.bias)
            out[p + "project.weight"] = _np(block.project.weight)
            out[p + "project.bias"] = _np(block.project.bias)
        out[f"{k}.tail.weight"] = _np(self.tail.weight)
        out[f"{k}.tail.bias"] = _np(self.tail.bias)
        return out


class Branch(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 8, 3, padding=1)
        self.act1 = nn.PReLU(8)
        self.conv2 = nn.Conv2d(8, 16, 3, padding=1)
        self.act2 = nn.PReLU(16)

    def forward(self, x):
        t = self.act1(self.conv1(x))
        t = self.act2(self.conv2(t))
        return t.flatten(1)


class IntraNet(nn.Module):
    """Context-to-block predictor for one (w, h) geometry at one QP."""

    def __init__(self, w: int, h: int, qp: int, trunk: int = 96):
        super().__init__()
        self.w, self.h, self.qp = w, h, qp
        self.n_a, self.n_l = context_dims(w, h)
        feat = 16 * self.n_a * (self.n_l + 2 * w) + 16 * 2 * h * self.n_l
        self.branch_above = Branch()
        self.branch_left = Branch()
        self.fc1 = nn.Linear(feat, trunk)
        self.act1 = nn.PReLU(trunk)
        self.fc2 = nn.Linear(trunk, trunk)
        self.act2 = nn.PReLU(trunk)
        self.head_pred = nn.Linear(trunk, w * h)
        self.head_grp1 = nn.Linear(trunk, 4)
        self.head_grp2 = nn.Linear(trunk, 4)
        nn.init.zeros_(self.head_pred.weight)
        nn.init.zeros_(self.head_pred.bias)

    def forward(self, above, left):
        """above: (N, 1, n_a, n_l+2w); left: (N, 1, 2h, n_l); both already
        mean-subtracted and scaled by 1/127.  Returns the normalized
        prediction (N, w*h) plus the two 4-way logit heads."""
        v = torch.cat([self.branch_above(above), self.branch_left(left)], dim=1)
        v = self.act1(self.fc1(v))
        v = self.act2(self.fc2(v))
        return self.head_pred(v), self.head_grp1(v), self.head_grp2(v)

    def export_tensors(self) -> dict[str, np.ndarray]:
        pre = f"intra.{self.w}x{self.h}.qp{self.qp}."
        out = {}
        for name, branch in (("branch_above", self.branch_above), ("branch_left", self.branch_left)):
            out[pre + name + ".conv1.weight"] = _np(branch.conv1.weight)
            out[pre + name + ".conv1.bias"] = _np(branch.conv1.bias)
            out[pre + name + ".conv1.alpha"] = _np(branch.act1.weight)
            out[pre + name + ".conv2.weight"] = _np(branch.conv2.weight)
            out[pre + name + ".conv2.bias"] = _np(branch.conv2.bias)
            out[pre + name + ".conv2.alpha"] = _np(branch.act2.weight)
        out[pre + "trunk.fc1.weight"] = _np(self.fc1.weight)
        out[pre + "trunk.fc1.bias"] = _np(self.fc1.bias)
        out[pre + "trunk.fc1.alpha"] = _np(self.act1.weight)
        out[pre + "trunk.fc2.weight"] = _np(self.fc2.weight)
        out[pre + "trunk.fc2.bias"] = _np(self.fc2.bias)
        out[pre + "trunk.fc2.alpha"] = _np(self.act2.weight)
        out[pre + "head_pred.weight"] = _np(self.head_pred.weight)
        out[pre + "head_pred.bias"] = _np(self.head_pred.bias)
        out[pre + "head_grp1.weight"] = _np(self.head_grp1.weight)
        out[pre + "head_grp1.bias"] = _np(self.head_grp1.bias)
        out[pre + "head_grp2.weight"] = _np(self.head_grp2.weight)
        out[pre + "head_grp2.bias"] = _np(self.head_grp2.bias)
        return out


def _np(param) -> np.ndarray:
    return param.detach().cpu().numpy().astype(np.float32)


def filter_planes(net: CnnlfNet, rec, pred, bs, qp: int):
    """Sample-domain forward pass: uint8-ish planes in, float planes out.

    Mirrors the runtime contract: output = clamp(rec + 255 * residual, 0, 255).
    """
    cc = content_channels(net.kind)

    def prep(a, scale):
        t = torch.as_tensor(np.asarray(a, dtype=np.float32) / scale)
        if t.ndim == 2:
            t = t[None]
        return t[None]  # (1, C, H, W)

    with torch.no_grad():
        out = net(prep(rec, 255.0), prep(pred, 255.0), prep(bs, 2.0), qp / 63.0)
    out = out[0].numpy().astype(np.float64) * 255.0
    return out[0] if cc == 1 else out


def predict_block(net: IntraNet, above, left, mean: float):
    """Sample-domain intra prediction mirroring the runtime de-normalization."""
    with torch.no_grad():
        pred, g1, g2 = net(
            torch.as_tensor(np.asarray(above, dtype=np.float32))[None, None],
            torch.as_tensor(np.asarray(left, dtype=np.float32))[None, None],
        )
    block = np.clip(
        pred[0].numpy().astype(np.float64) * 127.0 + mean, 0.0, 255.0
    ).reshape(net.h, net.w)
    return block, g1[0].numpy().astype(np.float64), g2[0].numpy().astype(np.float64)
