"""Block importance mapping: per-16x16 error E, CTU aggregation, delta QP.

Per motion-compensated 16x16 block the error is

    E = 0.2 * (SSD + 5) / (V + 5) + SSD / 3200

where SSD is the sum of squared differences against the compensated
reference block and V is the sum of squared deviations of the original
block from its own mean (both sums over the 256 block samples, not means).
CTU-level errors at temporal distance 1 and 2 combine as

    E3 = max(E1, E2) + |E2 - E1| * 3

and E3 maps to a delta QP in {-2..+2} through fixed thresholds.  Delta-QP
grids are produced only for frames whose POC is divisible by eight.

Numeric contract: V is evaluated as sum(x^2) - sum(x)^2/n from exact integer
sample moments, and every reduction (block sums, CTU means, pair averages)
accumulates in raster order, so results are bit-reproducible and can be
checked against a straight-line reference computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .motion import BLOCK, estimate_motion, motion_compensate
from .video_io import Frame420, _as_samples

__all__ = [
    "BlockError",
    "ImportanceGrid",
    "CtuImportance",
    "FrameImportance",
    "block_error",
    "frame_errors",
    "ctu_mean_e",
    "pair_e",
    "e3",
    "delta_qp_of_e3",
    "bim_sequence",
]


@dataclass(frozen=True)
class BlockError:
    """Eq-style error terms for one full 16x16 block."""

    ssd: float
    variance: float
    e: float


@dataclass(frozen=True)
class ImportanceGrid:
    """Per-block errors for one (current, reference) pair.

    The grid covers exactly the full 16x16 blocks; partial edge blocks carry
    no importance statistics.  Frame dimensions are kept so CTU aggregation
    can cover the whole picture.
    """

    poc: int
    width: int
    height: int
    rows: int
    cols: int
    blocks: tuple  # rows x cols of BlockError


@dataclass(frozen=True)
class CtuImportance:
    ctu_row: int
    ctu_col: int
    e1: float
    e2: float
    e3: float
    delta_qp: int


@dataclass(frozen=True)
class FrameImportance:
    """Per-CTU E1/E2/E3 and delta QP for one gated frame."""

    poc: int
    ctus: tuple  # rows x cols of CtuImportance

    @property
    def delta_grid(self) -> np.ndarray:
        return np.array(
            [[c.delta_qp for c in row] for row in self.ctus], dtype=np.int32
        )


def block_error(ssd: float, variance: float) -> float:
    """Importance error of one block from its SSD and variance sums."""
    if ssd < 0 or variance < 0:
        raise ValueError(f"ssd and variance must be non-negative, got ({ssd}, {variance})")
    return 0.2 * (ssd + 5.0) / (variance + 5.0) + ssd / 3200.0


def frame_errors(current, reference, field) -> ImportanceGrid:
    """Per-block errors of `current` against the motion-compensated reference.

    Variance comes from the original (current) block; SSD from the difference
    against the compensated reference.  Only full 16x16 blocks are covered.
    """
    cur = _as_samples(current)
    ref = _as_samples(reference)
    if cur.shape != ref.shape:
        raise ValueError(f"plane dimensions differ: {cur.shape} vs {ref.shape}")
    comp = motion_compensate(ref, field)

    h, w = cur.shape
    rows, cols = h // BLOCK, w // BLOCK
    n = BLOCK * BLOCK
    cur64 = cur.astype(np.int64)
    diff = cur64 - comp.astype(np.int64)

    out = []
    for r in range(rows):
        row = []
        for c in range(cols):
            ys, xs = r * BLOCK, c * BLOCK
            blk = cur64[ys : ys + BLOCK, xs : xs + BLOCK]
            sx = int(np.sum(blk))
            sx2 = int(np.sum(blk * blk))
            variance = float(sx2) - float(sx) * float(sx) / n
            d = diff[ys : ys + BLOCK, xs : xs + BLOCK]
            ssd = float(int(np.sum(d * d)))
            row.append(BlockError(ssd=ssd, variance=variance, e=block_error(ssd, variance)))
        out.append(tuple(row))
    poc = current.poc if isinstance(current, Frame420) else -1
    return ImportanceGrid(
        poc=poc, width=w, height=h, rows=rows, cols=cols, blocks=tuple(out)
    )


def ctu_mean_e(grid: ImportanceGrid, ctu_size: int) -> list[list[float]]:
    """Mean block E per CTU (blocks assigned by their top-left sample).

    CTUs containing no full 16x16 block get mean 0.
    """
    if ctu_size % BLOCK:
        raise ValueError(f"ctu_size must be a multiple of {BLOCK}, got {ctu_size}")
    per_ctu = ctu_size // BLOCK
    ctu_rows, ctu_cols = _ctu_grid_dims(grid.width, grid.height, ctu_size)
    means = []
    for cr in range(ctu_rows):
        row = []
        for cc in range(ctu_cols):
            total = 0.0
            count = 0
            for br in range(cr * per_ctu, min((cr + 1) * per_ctu, grid.rows)):
                for bc in range(cc * per_ctu, min((cc + 1) * per_ctu, grid.cols)):
                    total += grid.blocks[br][bc].e
                    count += 1
            row.append(total / count if count else 0.0)
        means.append(row)
    return means


def _ctu_grid_dims(width: int, height: int, ctu_size: int) -> tuple[int, int]:
    return -(-height // ctu_size), -(-width // ctu_size)


def pair_e(
    current: Frame420,
    prev: Frame420 | None,
    next: Frame420 | None,
    distance: int,
    ctu_size: int,
    search_range: int = 8,
) -> list[list[float]]:
    """Per-CTU E at one temporal distance, averaged over the available sides.

    At a sequence boundary the single existing side is used alone.  Luma only.
    """
    if distance not in (1, 2):
        raise ValueError(f"distance must be 1 or 2, got {distance}")
    if prev is None and next is None:
        raise ValueError("at least one of prev/next must be present")

    maps = []
    for ref in (prev, next):
        if ref is None:
            continue
        field = estimate_motion(current.y, ref.y, search_range)
        grid = frame_errors(current.y, ref.y, field)
        maps.append(ctu_mean_e(grid, ctu_size))
    if len(maps) == 1:
        return maps[0]
    return [
        [(a + b) / 2.0 for a, b in zip(ra, rb)]
        for ra, rb in zip(maps[0], maps[1])
    ]


def e3(e1: float, e2: float) -> float:
    """Combined importance emphasizing how quickly importance disappears."""
    if e1 < 0 or e2 < 0:
        raise ValueError(f"e1 and e2 must be non-negative, got ({e1}, {e2})")
    return max(e1, e2) + abs(e2 - e1) * 3.0


def delta_qp_of_e3(value: float) -> int:
    """Threshold a CTU's E3 into a delta QP in {-2, -1, 0, +1, +2}."""
    if value < 0:
        raise ValueError(f"e3 must be non-negative, got {value}")
    if value <= 22:
        return -2
    if value <= 41:
        return -1
    if value <= 76:
        return 0
    if value < 102:
        return 1
    return 2


def bim_sequence(
    frames: list[Frame420],
    ctu_size: int,
    search_range: int = 8,
) -> dict[int, FrameImportance]:
    """Delta-QP grids for every frame whose POC is divisible by eight.

    E1 pairs the frames at distance 1, E2 those at distance 2; a missing
    distance-2 neighborhood falls back to E2 = E1, and a frame with no
    distance-1 neighbor at all (single-frame sequence) gets an all-zero grid.
    """
    if not frames:
        raise ValueError("empty sequence")
    by_poc = {f.poc: f for f in frames}
    w, h = frames[0].width, frames[0].height
    ctu_rows, ctu_cols = _ctu_grid_dims(w, h, ctu_size)

    out: dict[int, FrameImportance] = {}
    for f in frames:
        if f.poc % 8:
            continue
        p1, n1 = by_poc.get(f.poc - 1), by_poc.get(f.poc + 1)
        p2, n2 = by_poc.get(f.poc - 2), by_poc.get(f.poc + 2)
        if p1 is None and n1 is None:
            ctus = tuple(
                tuple(
                    CtuImportance(r, c, 0.0, 0.0, 0.0, 0) for c in range(ctu_cols)
                )
                for r in range(ctu_rows)
            )
            out[f.poc] = FrameImportance(f.poc, ctus)
            continue
        e1_map = pair_e(f, p1, n1, 1, ctu_size, search_range)
        if p2 is None and n2 is None:
            e2_map = e1_map
        else:
            e2_map = pair_e(f, p2, n2, 2, ctu_size, search_range)
        ctus = []
        for r in range(ctu_rows):
            row = []
            for c in range(ctu_cols):
                v1, v2 = e1_map[r][c], e2_map[r][c]
                v3 = e3(v1, v2)
                row.append(CtuImportance(r, c, v1, v2, v3, delta_qp_of_e3(v3)))
            ctus.append(tuple(row))
        out[f.poc] = FrameImportance(f.poc, tuple(ctus))
    return out
