"""Forward-pass parity between the training framework and the runtime.

Feeds identical random inputs through the torch model and the codec's
nn-eval command on the exported weights file; reports the max abs output
difference and passes when it stays below 1e-4.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .codec_cli import default_codec_cmd, nn_eval
from .models import CnnlfNet, IntraNet, filter_planes, predict_block
from .nnwf import read_nnwf

PARITY_TOLERANCE = 1e-4


@dataclass
class ParityReport:
    model: str
    trials: int
    max_abs_diff: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff < PARITY_TOLERANCE


def load_cnnlf_net(tensors: dict, kind: str, channels: int, blocks: int) -> CnnlfNet:
    net = CnnlfNet(kind, channels=channels, blocks=blocks)
    state = {}
    mapping = {f"{kind}.head.weight": "head.weight", f"{kind}.head.bias": "head.bias",
               f"{kind}.tail.weight": "tail.weight", f"{kind}.tail.bias": "tail.bias"}
    for i in range(blocks):
        for sub, torch_sub in (
            ("expand.weight", "expand.weight"), ("expand.bias", "expand.bias"),
            ("act.alpha", "act.weight"),
            ("sep_v.weight", "sep_v.weight"), ("sep_v.bias", "sep_v.bias"),
            ("sep_h.weight", "sep_h.weight"), ("sep_h.bias", "sep_h.bias"),
            ("project.weight", "project.weight"), ("project.bias", "project.bias"),
        ):
            mapping[f"{kind}.block{i}.{sub}"] = f"blocks.{i}.{torch_sub}"
    for name, target in mapping.items():
        state[target] = torch.as_tensor(tensors[name])
    net.load_state_dict(state)
    net.eval()
    return net


def cnnlf_parity(
    weights_path: Path,
    kind: str,
    channels: int,
    blocks: int,
    trials: int = 25,
    seed: int = 0,
    workdir: Path | None = None,
    codec_cmd: list[str] | None = None,
) -> ParityReport:
    tensors = read_nnwf(weights_path.read_bytes())
    net = load_cnnlf_net(tensors, kind, channels, blocks)
    codec_cmd = codec_cmd or default_codec_cmd()
    workdir = workdir or weights_path.parent
    rng = np.random.default_rng(seed)
    cc = 1 if kind == "luma" else 2
    worst = 0.0
    for t in range(trials):
        h = int(rng.integers(12, 33))
        w = int(rng.integers(12, 33))
        rec = rng.integers(0, 256, (cc, h, w)).astype(np.float32)
        pred = rng.integers(0, 256, (cc, h, w)).astype(np.float32)
        bs = rng.integers(0, 3, (h, w)).astype(np.float32)
        qp = int(rng.integers(0, 64))
        mine = filter_planes(net, rec if cc > 1 else rec[0], pred if cc > 1 else pred[0], bs, qp)
        out = nn_eval(
            codec_cmd, weights_path, kind,
            {"rec": rec if cc > 1 else rec[0], "pred": pred if cc > 1 else pred[0], "bs": bs},
            workdir / f"parity_{kind}_{t}.nnwf", qp=qp, workdir=workdir,
        )["out"]
        worst = max(worst, float(np.max(np.abs(np.asarray(out, np.float64) - mine))))
    return ParityReport(model=kind, trials=trials, max_abs_diff=worst)


def load_intra_net(tensors: dict, w: int, h: int, qp: int) -> IntraNet:
    net = IntraNet(w, h, qp)
    pre = f"intra.{w}x{h}.qp{qp}."
    mapping = {}
    for name, tname in (("branch_above", "branch_above"), ("branch_left", "branch_left")):
        mapping[pre + name + ".conv1.weight"] = f"{tname}.conv1.weight"
        mapping[pre + name + ".conv1.bias"] = f"{tname}.conv1.bias"
        mapping[pre + name + ".conv1.alpha"] = f"{tname}.act1.weight"
        mapping[pre + name + ".conv2.weight"] = f"{tname}.conv2.weight"
        mapping[pre + name + ".conv2.bias"] = f"{tname}.conv2.bias"
        mapping[pre + name + ".conv2.alpha"] = f"{tname}.act2.weight"
    mapping[pre + "trunk.fc1.weight"] = "fc1.weight"
    mapping[pre + "trunk.fc1.bias"] = "fc1.bias"
    mapping[pre + "trunk.fc1.alpha"] = "act1.weight"
    mapping[pre + "trunk.fc2.weight"] = "fc2.weight"
    mapping[pre + "trunk.fc2.bias"] = "fc2.bias"
    mapping[pre + "trunk.fc2.alpha"] = "act2.weight"
    mapping[pre + "head_pred.weight"] = "head_pred.weight"
    mapping[pre + "head_pred.bias"] = "head_pred.bias"
    mapping[pre + "head_grp1.weight"] = "head_grp1.weight"
    mapping[pre + "head_grp1.bias"] = "head_grp1.bias"
    mapping[pre + "head_grp2.weight"] = "head_grp2.weight"
    mapping[pre + "head_grp2.bias"] = "head_grp2.bias"
    state = {target: torch.as_tensor(tensors[name]) for name, target in mapping.items()}
    net.load_state_dict(state)
    net.eval()
    return net


def intra_parity(
    weights_path: Path,
    size: tuple[int, int],
    qp: int,
    trials: int = 25,
    seed: int = 0,
    workdir: Path | None = None,
    codec_cmd: list[str] | None = None,
) -> ParityReport:
    tensors = read_nnwf(weights_path.read_bytes())
    w, h = size
    net = load_intra_net(tensors, w, h, qp)
    codec_cmd = codec_cmd or default_codec_cmd()
    workdir = workdir or weights_path.parent
    rng = np.random.default_rng(seed)
    n_a, n_l = net.n_a, net.n_l
    worst = 0.0
    for t in range(trials):
        above = rng.normal(0, 0.4, (n_a, n_l + 2 * w)).astype(np.float32)
        left = rng.normal(0, 0.4, (2 * h, n_l)).astype(np.float32)
        mean = float(rng.uniform(30, 220))
        mine_pred, mine_g1, mine_g2 = predict_block(net, above, left, mean)
        out = nn_eval(
            codec_cmd, weights_path, f"intra.{w}x{h}.qp{qp}",
            {"above": above, "left": left, "mean": np.array([mean], np.float32)},
            workdir / f"parity_intra_{t}.nnwf", workdir=workdir,
        )
        worst = max(
            worst,
            float(np.max(np.abs(np.asarray(out["pred"], np.float64) - mine_pred))),
            float(np.max(np.abs(np.asarray(out["grp1"], np.float64) - mine_g1))),
            float(np.max(np.abs(np.asarray(out["grp2"], np.float64) - mine_g2))),
        )
    return ParityReport(model=f"intra.{w}x{h}.qp{qp}", trials=trials, max_abs_diff=worst)
