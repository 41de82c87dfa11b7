"""Training loops for the loop filter and the intra predictors.

The filter optimizes MSE for the first 80% of the step budget, then
switches to negative SSIM for the remainder and doubles the patch extent
(the stored patches are already twice the base size; the MSE phase crops
their centers).  The learning rate decays by 0.1 whenever the epoch loss
plateaus.  Every run emits a JSON-able log: one record per step
({step, loss, lr, phase}) plus an events list (loss_switch, lr_decay).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .datasets import IntraSample, TrainSample
from .models import CnnlfNet, IntraNet
from .ssim import ssim


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, dump_path: Path | None):
        super().__init__(message)
        self.dump_path = dump_path


@dataclass
class RunLog:
    steps: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def log_step(self, step: int, loss: float, lr: float, phase: str) -> None:
        self.steps.append({"step": step, "loss": loss, "lr": lr, "phase": phase})

    def log_event(self, event: str, step: int, **extra) -> None:
        self.events.append({"event": event, "step": step, **extra})

    def save(self, path: Path) -> None:
        path.write_text(json.dumps({"steps": self.steps, "events": self.events}, indent=2))

    @property
    def switch_step(self) -> int | None:
        for e in self.events:
            if e["event"] == "loss_switch":
                return e["step"]
        return None


def _check_finite(loss: torch.Tensor, net, step: int, dump_dir: Path | None):
    if torch.isfinite(loss):
        return
    dump_path = None
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)
        dump_path = dump_dir / f"diverged_step{step}.pt"
        torch.save({"step": step, "state": net.state_dict()}, dump_path)
    raise TrainingDiverged(
        f"non-finite loss {loss.item() if loss.numel() == 1 else float('nan')} "
        f"at step {step}",
        dump_path,
    )


def _filter_batches(samples: list[TrainSample], batch: int, rng: np.random.Generator):
    order = rng.permutation(len(samples))
    for i in range(0, len(samples), batch):
        yield [samples[j] for j in order[i : i + batch]]


def _stack_filter_batch(batch: list[TrainSample], crop: int | None):
    def cut(a):
        if crop is None:
            return a
        h, w = a.shape[-2:]
        y0, x0 = (h - crop) // 2, (w - crop) // 2
        return a[..., y0 : y0 + crop, x0 : x0 + crop]

    rec = torch.as_tensor(
        np.stack([cut(s.rec) for s in batch]).astype(np.float32) / 255.0
    )
    pred = torch.as_tensor(
        np.stack([cut(s.pred) for s in batch]).astype(np.float32) / 255.0
    )
    bs = torch.as_tensor(
        np.stack([cut(s.bs)[None] for s in batch]).astype(np.float32) / 2.0
    )
    orig = torch.as_tensor(
        np.stack([cut(s.orig) for s in batch]).astype(np.float32) / 255.0
    )
    qp = torch.as_tensor(
        np.array([s.qp for s in batch], dtype=np.float32) / 63.0
    ).reshape(-1, 1, 1, 1) * torch.ones_like(bs)
    return rec, pred, bs, orig, qp


def train_cnnlf(
    samples: list[TrainSample],
    epochs: int = 10,
    lr: float = 1e-4,
    batch: int = 64,
    channels: int = 16,
    blocks: int = 4,
    plateau_patience: int = 3,
    plateau_threshold: float = 0.01,
    seed: int = 0,
    dump_dir: Path | None = None,
) -> tuple[dict, RunLog]:
    """Train one loop-filter network; returns (canonical tensor map, log).

    The plateau rule treats an epoch as non-improving unless its mean loss
    beats the best by plateau_threshold (relative); patience such epochs in
    a row decay the learning rate by 0.1.
    """
    if not samples:
        raise ValueError("no training samples")
    kind = samples[0].kind
    torch.manual_seed(seed)
    net = CnnlfNet(kind, channels=channels, blocks=blocks)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    sched = torch.optim.lr_scheduler.ReduceLROnPlateau(
        opt, factor=0.1, patience=plateau_patience,
        threshold=plateau_threshold, threshold_mode="rel",
    )
    rng = np.random.default_rng(seed)

    steps_per_epoch = math.ceil(len(samples) / batch)
    total_steps = steps_per_epoch * epochs
    switch_step = math.floor(0.8 * total_steps)
    stored = samples[0].rec.shape[-1]
    base_crop = stored // 2

    log = RunLog()
    step = 0
    switched = False
    for epoch in range(epochs):
        epoch_losses = []
        for group in _filter_batches(samples, batch, rng):
            phase = "mse" if step < switch_step else "ssim"
            if phase == "ssim" and not switched:
                log.log_event("loss_switch", step, to="ssim", patch=stored)
                switched = True
                # fresh optimizer state: the objective changes scale by orders
                # of magnitude, and stale Adam second moments would otherwise
                # turn the first post-switch updates into a step burst
                cur_lr = opt.param_groups[0]["lr"]
                opt = torch.optim.Adam(net.parameters(), lr=cur_lr)
                sched = torch.optim.lr_scheduler.ReduceLROnPlateau(
                    opt, factor=0.1, patience=plateau_patience,
                    threshold=plateau_threshold, threshold_mode="rel",
                )
            crop = base_crop if phase == "mse" else None
            rec, pred, bs, orig, qp = _stack_filter_batch(group, crop)
            out = net(rec, pred, bs, qp)
            if phase == "mse":
                loss = torch.mean((out - orig) ** 2)
            else:
                loss = -ssim(out, orig)
            _check_finite(loss, net, step, dump_dir)
            opt.zero_grad()
            loss.backward()
            opt.step()
            log.log_step(step, float(loss.item()), opt.param_groups[0]["lr"], phase)
            epoch_losses.append(float(loss.item()))
            step += 1
        before = opt.param_groups[0]["lr"]
        sched.step(float(np.mean(epoch_losses)))
        after = opt.param_groups[0]["lr"]
        if after < before:
            log.log_event("lr_decay", step, lr=after)
    return net.export_tensors(), log


def _intra_batches(samples, batch, rng):
    order = rng.permutation(len(samples))
    for i in range(0, len(samples), batch):
        yield [samples[j] for j in order[i : i + batch]]


def train_nnintra(
    samples: list[IntraSample],
    size: tuple[int, int],
    qp: int,
    epochs: int = 15,
    lr: float = 1e-4,
    batch: int = 64,
    grp_loss_weight: float = 0.0,
    seed: int = 0,
    dump_dir: Path | None = None,
) -> tuple[dict, RunLog]:
    """Train one intra predictor for (w, h) at one QP; grp heads carry no
    loss by default (their labels never exist in this toy setting)."""
    if not samples:
        raise ValueError("no training samples")
    w, h = size
    for s in samples:
        if s.target.shape != (h, w):
            raise ValueError(
                f"sample target shape {s.target.shape} does not match size {size}"
            )
        if s.qp != qp:
            raise ValueError(f"sample qp {s.qp} does not match requested {qp}")
    torch.manual_seed(seed)
    net = IntraNet(w, h, qp)
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    rng = np.random.default_rng(seed)
    log = RunLog()
    step = 0
    for epoch in range(epochs):
        for group in _intra_batches(samples, batch, rng):
            above = torch.as_tensor(np.stack([s.above for s in group])[:, None])
            left = torch.as_tensor(np.stack([s.left for s in group])[:, None])
            target = torch.as_tensor(
                np.stack([s.target.reshape(-1) for s in group])
            )
            pred, g1, g2 = net(above, left)
            loss = torch.mean((pred - target) ** 2)
            if grp_loss_weight:
                # no transform-group labels exist here; regularize toward
                # uniform logits when a weight is requested
                loss = loss + grp_loss_weight * (g1.pow(2).mean() + g2.pow(2).mean())
            _check_finite(loss, net, step, dump_dir)
            opt.zero_grad()
            loss.backward()
            opt.step()
            log.log_step(step, float(loss.item()), opt.param_groups[0]["lr"], "mse")
            step += 1
    return net.export_tensors(), log


def held_out_split(samples: list, fraction: float = 0.1, seed: int = 17):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    n_hold = max(1, int(len(samples) * fraction))
    hold = [samples[i] for i in order[:n_hold]]
    train = [samples[i] for i in order[n_hold:]]
    return train, hold
