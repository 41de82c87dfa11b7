"""Hierarchical 16x16 block motion estimation and motion compensation.

The search runs on a 3-level pyramid: exhaustive search on 4x4 blocks at
quarter resolution over +/-ceil(range/4), then a +/-2 window refinement of
the upscaled predictor at half and full resolution.  The zero vector is a
candidate at every level, so a returned vector can never lose to it.  All
out-of-picture reads clamp to the nearest edge sample.

Vector convention: the predictor for the block at (x, y) is read from the
reference at (x + dx, y + dy).  Content that moved right between reference
and current therefore yields negative dx.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .video_io import _as_samples

__all__ = [
    "MotionVector",
    "MotionField",
    "downsample2x",
    "estimate_motion",
    "motion_compensate",
    "compensate_block",
]

BLOCK = 16


@dataclass(frozen=True)
class MotionVector:
    dx: int
    dy: int


@dataclass(frozen=True)
class MotionField:
    """Per-16x16-block integer displacements over a block grid."""

    block_size: int
    cols: int
    rows: int
    vectors: tuple  # rows x cols tuple of MotionVector

    def __post_init__(self):
        if len(self.vectors) != self.rows or any(
            len(r) != self.cols for r in self.vectors
        ):
            raise ValueError("vector grid does not match rows x cols")

    def vector(self, row: int, col: int) -> MotionVector:
        return self.vectors[row][col]


def _grid_dims(width: int, height: int, block: int = BLOCK) -> tuple[int, int]:
    return -(-width // block), -(-height // block)


def downsample2x(plane) -> np.ndarray:
    """Halve both dimensions (ceil), each output sample the rounded mean
    of its up-to-2x2 source cell; edge cells use the available samples."""
    src = _as_samples(plane)
    h, w = src.shape
    # Edge replication makes partial cells average to the same rounded value
    # as averaging only their available samples.
    padded = src
    if h % 2:
        padded = np.vstack([padded, padded[-1:, :]])
    if w % 2:
        padded = np.hstack([padded, padded[:, -1:]])
    s = (
        padded[0::2, 0::2].astype(np.uint16)
        + padded[1::2, 0::2]
        + padded[0::2, 1::2]
        + padded[1::2, 1::2]
    )
    return ((s + 2) // 4).astype(np.uint8)


def _block_extent(index: int, block: int, limit: int) -> tuple[int, int]:
    lo = index * block
    return lo, min(lo + block, limit)


def _search_level(
    cur: np.ndarray,
    ref: np.ndarray,
    block: int,
    rows: int,
    cols: int,
    bound: int,
    starts,
    window: int,
):
    """One pyramid level: per block, pick the lowest-SSD candidate around its
    start vector (plus the zero vector), clamped to +/-bound per component.

    Ties break to smaller |dx|+|dy|, then smaller dy, then smaller dx.
    """
    h, w = cur.shape
    pad = bound
    ref_pad = np.pad(ref, pad, mode="edge").astype(np.int32)
    cur32 = cur.astype(np.int32)
    offsets = [(dx, dy) for dy in range(-window, window + 1)
               for dx in range(-window, window + 1)]
    best = [[(0, 0)] * cols for _ in range(rows)]
    for r in range(rows):
        y0, y1 = _block_extent(r, block, h)
        for c in range(cols):
            x0, x1 = _block_extent(c, block, w)
            cur_blk = cur32[y0:y1, x0:x1]
            sx, sy = starts[r][c] if starts is not None else (0, 0)
            cands = set()
            for ox, oy in offsets:
                cands.add(
                    (
                        max(-bound, min(bound, sx + ox)),
                        max(-bound, min(bound, sy + oy)),
                    )
                )
            cands.add((0, 0))
            best_key = None
            best_vec = (0, 0)
            for dx, dy in sorted(cands):
                ref_blk = ref_pad[y0 + dy + pad : y1 + dy + pad,
                                  x0 + dx + pad : x1 + dx + pad]
                d = cur_blk - ref_blk
                ssd = int(np.sum(d * d, dtype=np.int64))
                key = (ssd, abs(dx) + abs(dy), dy, dx)
                if best_key is None or key < best_key:
                    best_key = key
                    best_vec = (dx, dy)
            best[r][c] = best_vec
    return best


def estimate_motion(current, reference, search_range: int) -> MotionField:
    """Hierarchical block motion search minimizing per-block SSD."""
    cur = _as_samples(current)
    ref = _as_samples(reference)
    if cur.shape != ref.shape:
        raise ValueError(f"plane dimensions differ: {cur.shape} vs {ref.shape}")
    if search_range < 2:
        raise ValueError(f"search_range must be >= 2, got {search_range}")

    h, w = cur.shape
    cols, rows = _grid_dims(w, h)

    cur1, ref1 = downsample2x(cur), downsample2x(ref)
    cur2, ref2 = downsample2x(cur1), downsample2x(ref1)

    b2 = -(-search_range // 4)
    b1 = -(-search_range // 2)

    # Quarter resolution: exhaustive over +/-b2 (window b2 around zero start).
    v2 = _search_level(cur2, ref2, 4, rows, cols, b2, None, b2)
    v1_start = [[(2 * dx, 2 * dy) for dx, dy in row] for row in v2]
    v1 = _search_level(cur1, ref1, 8, rows, cols, b1, v1_start, 2)
    v0_start = [[(2 * dx, 2 * dy) for dx, dy in row] for row in v1]
    v0 = _search_level(cur, ref, BLOCK, rows, cols, search_range, v0_start, 2)

    vectors = tuple(
        tuple(MotionVector(dx, dy) for dx, dy in row) for row in v0
    )
    return MotionField(BLOCK, cols, rows, vectors)


def compensate_block(
    ref: np.ndarray, y0: int, x0: int, bh: int, bw: int, dy: int, dx: int
) -> np.ndarray:
    """Displaced block read with out-of-picture coordinates clamped to the edge."""
    h, w = ref.shape
    ys = np.clip(np.arange(y0 + dy, y0 + dy + bh), 0, h - 1)
    xs = np.clip(np.arange(x0 + dx, x0 + dx + bw), 0, w - 1)
    return ref[np.ix_(ys, xs)]


def motion_compensate(reference, field: MotionField) -> np.ndarray:
    """Apply a motion field to a reference plane, block by block."""
    ref = _as_samples(reference)
    h, w = ref.shape
    cols, rows = _grid_dims(w, h)
    if (field.cols, field.rows) != (cols, rows) or field.block_size != BLOCK:
        raise ValueError(
            f"motion field grid {field.cols}x{field.rows} does not match "
            f"a {w}x{h} plane ({cols}x{rows} blocks expected)"
        )
    out = np.empty_like(ref)
    for r in range(rows):
        y0, y1 = _block_extent(r, BLOCK, h)
        for c in range(cols):
            x0, x1 = _block_extent(c, BLOCK, w)
            v = field.vector(r, c)
            out[y0:y1, x0:x1] = compensate_block(
                ref, y0, x0, y1 - y0, x1 - x0, v.dy, v.dx
            )
    return out
