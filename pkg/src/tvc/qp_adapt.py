"""Sequence classification, key-frame QP offset, perceptual CTU deltas,
QP-plan composition, and the QPMAP sidecar text format.

The key-frame rule pins fast-moving sequences at offset -3 and maps slower
sequences onto [-10, -4], more negative the more static the clip.  The
per-CTU perceptual rule is a deliberately simple log-activity stand-in,
isolated here so it can be swapped for a real perceptual model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import bim
from .bim import FrameImportance, bim_sequence
from .errors import QpmapError
from .motion import estimate_motion
from .video_io import Frame420, _as_samples

__all__ = [
    "SequenceKind",
    "SequenceClass",
    "OffsetConfig",
    "AnalyzeConfig",
    "FramePlan",
    "QpPlan",
    "classify_sequence",
    "keyframe_offset",
    "perceptual_ctu_delta",
    "compose_qp_plan",
    "uniform_plan",
    "analyze",
    "write_qpmap",
    "read_qpmap",
]

QP_MAX = 63


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def clamp_qp(qp: int) -> int:
    return max(0, min(QP_MAX, qp))


class SequenceKind(str, Enum):
    SLOW = "Slow"
    FAST = "Fast"


@dataclass(frozen=True)
class SequenceClass:
    kind: SequenceKind
    activity: float

    @property
    def is_slow(self) -> bool:
        return self.kind is SequenceKind.SLOW


@dataclass(frozen=True)
class OffsetConfig:
    """Key-frame offset rule parameters."""

    fast_offset: int = -3
    slow_gain: float = 1.0
    epsilon: float = 0.05
    slow_min: int = 4
    slow_max: int = 10


def classify_sequence(
    frames: list[Frame420],
    probe_count: int = 8,
    threshold: float = 2.0,
    search_range: int = 8,
) -> SequenceClass:
    """Classify a clip as Slow or Fast from mean temporal E over probe pairs.

    Activity is the mean, over the first min(probe_count, n-1) consecutive
    frame pairs, of the frame-mean block error of each frame predicted from
    its predecessor (motion-refined).  Slow iff activity < threshold.
    """
    if len(frames) < 2:
        raise ValueError(f"need at least 2 frames to classify, got {len(frames)}")
    pairs = min(probe_count, len(frames) - 1)
    total = 0.0
    for i in range(pairs):
        cur, ref = frames[i + 1], frames[i]
        fld = estimate_motion(cur.y, ref.y, search_range)
        grid = bim.frame_errors(cur.y, ref.y, fld)
        es = [b.e for row in grid.blocks for b in row]
        total += sum(es) / len(es) if es else 0.0
    activity = total / pairs
    kind = SequenceKind.SLOW if activity < threshold else SequenceKind.FAST
    return SequenceClass(kind=kind, activity=activity)


def keyframe_offset(
    seq_class: SequenceClass,
    persistence: float = 0.0,
    cfg: OffsetConfig = OffsetConfig(),
) -> int:
    """Key-frame QP offset: -3 for Fast, a clamped activity-driven negative
    value in [-slow_max, -slow_min] for Slow."""
    if persistence < 0:
        raise ValueError(f"persistence must be >= 0, got {persistence}")
    if not seq_class.is_slow:
        return cfg.fast_offset
    raw = _round_half_up(3.0 + cfg.slow_gain * (1.0 / (seq_class.activity + cfg.epsilon)))
    return -max(cfg.slow_min, min(cfg.slow_max, raw))


def perceptual_ctu_delta(frame, ctu_size: int) -> np.ndarray:
    """Per-CTU delta from relative log2 luma activity, clamped to [-3, +3].

    Activity of a CTU is 1 plus the sum of squared deviations of its luma
    samples from the CTU mean; deltas compare each CTU against the frame's
    geometric-mean activity, so a flat frame maps to all zeros.
    """
    luma = frame.y.samples if isinstance(frame, Frame420) else _as_samples(frame)
    h, w = luma.shape
    rows, cols = -(-h // ctu_size), -(-w // ctu_size)
    acts = np.empty((rows, cols), dtype=np.float64)
    luma64 = luma.astype(np.int64)
    for r in range(rows):
        for c in range(cols):
            blk = luma64[r * ctu_size : (r + 1) * ctu_size, c * ctu_size : (c + 1) * ctu_size]
            n = blk.size
            sx = int(np.sum(blk))
            sx2 = int(np.sum(blk * blk))
            acts[r, c] = 1.0 + (float(sx2) - float(sx) * float(sx) / n)
    geo = math.exp(float(np.mean(np.log(acts))))
    deltas = np.empty((rows, cols), dtype=np.int32)
    for r in range(rows):
        for c in range(cols):
            d = _round_half_up(math.log2(acts[r, c] / geo))
            deltas[r, c] = max(-3, min(3, d))
    return deltas


@dataclass(frozen=True)
class FramePlan:
    poc: int
    is_key: bool
    frame_qp: int
    grid: np.ndarray  # (ctu_rows, ctu_cols) int32, final per-CTU QPs


@dataclass(frozen=True)
class QpPlan:
    """Final QP assignment consumed by the encoder."""

    base_qp: int
    keyframe_qp: int
    ctu_size: int
    width: int
    height: int
    frames: tuple  # of FramePlan

    def __post_init__(self):
        for fp in self.frames:
            g = np.asarray(fp.grid)
            if g.size and (g.min() < 0 or g.max() > QP_MAX):
                raise ValueError(f"frame {fp.poc}: QP out of [0, {QP_MAX}]")

    def frame(self, poc: int) -> FramePlan:
        return self.frames[poc]

    @property
    def frame_count(self) -> int:
        return len(self.frames)


def uniform_plan(
    base_qp: int, width: int, height: int, frame_count: int, ctu_size: int
) -> QpPlan:
    """A plan with every CTU of every frame at base_qp (no offsets, no deltas)."""
    rows, cols = -(-height // ctu_size), -(-width // ctu_size)
    grid = np.full((rows, cols), clamp_qp(base_qp), dtype=np.int32)
    frames = tuple(
        FramePlan(poc=i, is_key=(i == 0), frame_qp=clamp_qp(base_qp), grid=grid.copy())
        for i in range(frame_count)
    )
    return QpPlan(clamp_qp(base_qp), clamp_qp(base_qp), ctu_size, width, height, frames)


def compose_qp_plan(
    base_qp: int,
    frames: list[Frame420],
    bim_grids: dict[int, FrameImportance] | None,
    perceptual_grids: dict[int, np.ndarray] | None,
    seq_class: SequenceClass,
    ctu_size: int,
    offset_cfg: OffsetConfig = OffsetConfig(),
) -> QpPlan:
    """Compose final per-CTU QPs.

    The key frame (poc 0) starts from base_qp + keyframe_offset; every other
    frame starts from base_qp.  Per-CTU perceptual deltas apply everywhere;
    importance deltas apply only on frames with poc % 8 == 0.  Everything is
    clamped into [0, 63].
    """
    if not 0 <= base_qp <= QP_MAX:
        raise ValueError(f"base_qp must be in [0, {QP_MAX}], got {base_qp}")
    w, h = frames[0].width, frames[0].height
    rows, cols = -(-h // ctu_size), -(-w // ctu_size)
    key_qp = clamp_qp(base_qp + keyframe_offset(seq_class, cfg=offset_cfg))

    def grid_of(source, poc):
        if source is None or poc not in source:
            return None
        g = source[poc]
        g = g.delta_grid if isinstance(g, FrameImportance) else np.asarray(g)
        if g.shape != (rows, cols):
            raise ValueError(
                f"frame {poc}: delta grid shape {g.shape} != CTU grid {(rows, cols)}"
            )
        return g

    plans = []
    for f in frames:
        start = key_qp if f.poc == 0 else clamp_qp(base_qp)
        total = np.full((rows, cols), start, dtype=np.int32)
        pg = grid_of(perceptual_grids, f.poc)
        if pg is not None:
            total = total + pg
        if f.poc % 8 == 0:
            bg = grid_of(bim_grids, f.poc)
            if bg is not None:
                total = total + bg
        total = np.clip(total, 0, QP_MAX).astype(np.int32)
        plans.append(
            FramePlan(poc=f.poc, is_key=(f.poc == 0), frame_qp=start, grid=total)
        )
    return QpPlan(base_qp, key_qp, ctu_size, w, h, tuple(plans))


@dataclass
class AnalyzeConfig:
    base_qp: int = 37
    ctu_size: int = 128
    search_range: int = 8
    probe_count: int = 8
    activity_threshold: float = 2.0
    enable_bim: bool = False
    enable_perceptual: bool = False
    offset: OffsetConfig = field(default_factory=OffsetConfig)


def analyze(frames: list[Frame420], cfg: AnalyzeConfig) -> tuple[QpPlan, dict]:
    """Run the full analysis pipeline and return the plan plus a report dict."""
    if len(frames) >= 2:
        seq_class = classify_sequence(
            frames, cfg.probe_count, cfg.activity_threshold, cfg.search_range
        )
    else:
        seq_class = SequenceClass(SequenceKind.SLOW, 0.0)
    offset = keyframe_offset(seq_class, cfg=cfg.offset)

    bim_grids = (
        bim_sequence(frames, cfg.ctu_size, cfg.search_range)
        if cfg.enable_bim
        else None
    )
    perceptual_grids = (
        {f.poc: perceptual_ctu_delta(f, cfg.ctu_size) for f in frames}
        if cfg.enable_perceptual
        else None
    )
    plan = compose_qp_plan(
        cfg.base_qp, frames, bim_grids, perceptual_grids, seq_class,
        cfg.ctu_size, cfg.offset,
    )

    frame_reports = []
    for f in frames:
        entry: dict = {"poc": f.poc, "gated": f.poc % 8 == 0}
        if bim_grids is not None and f.poc in bim_grids:
            imp = bim_grids[f.poc]
            e1 = [[c.e1 for c in row] for row in imp.ctus]
            e2 = [[c.e2 for c in row] for row in imp.ctus]
            e3v = [[c.e3 for c in row] for row in imp.ctus]
            entry["bim"] = {
                "e1": e1,
                "e2": e2,
                "e3": e3v,
                "delta_qp": imp.delta_grid.tolist(),
                "e3_mean": float(np.mean(e3v)),
                "e3_max": float(np.max(e3v)),
            }
        if perceptual_grids is not None:
            entry["perceptual_delta"] = perceptual_grids[f.poc].tolist()
        frame_reports.append(entry)

    report = {
        "class": seq_class.kind.value,
        "activity": seq_class.activity,
        "keyframe_offset": offset,
        "base_qp": cfg.base_qp,
        "keyframe_qp": plan.keyframe_qp,
        "frames": frame_reports,
    }
    return plan, report


def write_qpmap(plan: QpPlan) -> str:
    """Serialize a plan as QPMAP sidecar text (bit-exact, human-diffable)."""
    lines = [f"QPMAP 1 {plan.width} {plan.height} {plan.ctu_size}"]
    for fp in plan.frames:
        lines.append(f"frame {fp.poc} key={1 if fp.is_key else 0} qp={fp.frame_qp}")
        for row in np.asarray(fp.grid):
            lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def read_qpmap(text: str) -> QpPlan:
    """Parse QPMAP text, rejecting unknown versions and malformed grids
    with errors that name the offending line."""
    lines = text.splitlines()
    if not lines:
        raise QpmapError("line 1: empty QPMAP file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "QPMAP":
        raise QpmapError(f"line 1: malformed header {lines[0]!r}")
    if head[1] != "1":
        raise QpmapError(f"line 1: unsupported QPMAP version {head[1]!r}")
    try:
        width, height, ctu_size = (int(v) for v in head[2:])
    except ValueError:
        raise QpmapError(f"line 1: non-integer header fields in {lines[0]!r}") from None
    if width <= 0 or height <= 0 or ctu_size <= 0:
        raise QpmapError("line 1: non-positive dimensions")
    rows, cols = -(-height // ctu_size), -(-width // ctu_size)

    frames = []
    i = 1
    expected_poc = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        parts = lines[i].split()
        if (
            len(parts) != 4
            or parts[0] != "frame"
            or not parts[2].startswith("key=")
            or not parts[3].startswith("qp=")
        ):
            raise QpmapError(f"line {i + 1}: malformed frame header {lines[i]!r}")
        try:
            poc = int(parts[1])
            key = int(parts[2][4:])
            frame_qp = int(parts[3][3:])
        except ValueError:
            raise QpmapError(f"line {i + 1}: non-integer frame fields") from None
        if poc != expected_poc:
            raise QpmapError(f"line {i + 1}: expected poc {expected_poc}, got {poc}")
        if key not in (0, 1):
            raise QpmapError(f"line {i + 1}: key flag must be 0 or 1")
        if not 0 <= frame_qp <= QP_MAX:
            raise QpmapError(f"line {i + 1}: frame qp {frame_qp} out of [0, {QP_MAX}]")
        i += 1
        grid = np.empty((rows, cols), dtype=np.int32)
        for r in range(rows):
            if i >= len(lines):
                raise QpmapError(f"line {len(lines) + 1}: missing grid row {r} of frame {poc}")
            vals = lines[i].split()
            if len(vals) != cols:
                raise QpmapError(
                    f"line {i + 1}: expected {cols} QP values, got {len(vals)}"
                )
            for c, v in enumerate(vals):
                try:
                    q = int(v)
                except ValueError:
                    raise QpmapError(f"line {i + 1}: non-integer QP {v!r}") from None
                if not 0 <= q <= QP_MAX:
                    raise QpmapError(f"line {i + 1}: QP {q} out of [0, {QP_MAX}]")
                grid[r, c] = q
            i += 1
        frames.append(FramePlan(poc=poc, is_key=bool(key), frame_qp=frame_qp, grid=grid))
        expected_poc += 1

    if not frames:
        raise QpmapError("line 2: QPMAP contains no frames")
    base_qp = next((fp.frame_qp for fp in frames if not fp.is_key), frames[0].frame_qp)
    key_qp = frames[0].frame_qp if frames[0].is_key else base_qp
    return QpPlan(base_qp, key_qp, ctu_size, width, height, tuple(frames))
