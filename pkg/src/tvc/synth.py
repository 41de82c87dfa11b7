"""Synthetic fixture clips used by tests and the experiment scripts."""

from __future__ import annotations

import numpy as np

from .video_io import Frame420, Plane

__all__ = [
    "flat_clip",
    "noise_clip",
    "moving_texture_clip",
    "transient_clip",
    "TRANSIENT_PATCH",
]

# (x, y, size) of the transient square in transient_clip, CTU-aligned for
# a 64-sample CTU grid.
TRANSIENT_PATCH = (128, 64, 64)


def _frame(y: np.ndarray, poc: int, chroma_value: int = 128) -> Frame420:
    h, w = y.shape
    c = np.full(((h + 1) // 2, (w + 1) // 2), chroma_value, dtype=np.uint8)
    return Frame420(Plane(y.astype(np.uint8)), Plane(c), Plane(c.copy()), poc)


def flat_clip(width: int, height: int, count: int, value: int = 128) -> list[Frame420]:
    """Identical constant-luma frames."""
    y = np.full((height, width), value, dtype=np.uint8)
    return [_frame(y.copy(), i) for i in range(count)]


def noise_clip(width: int, height: int, count: int, seed: int = 0) -> list[Frame420]:
    """Independent uniform noise per frame (fast-moving by construction)."""
    rng = np.random.default_rng(seed)
    return [
        _frame(rng.integers(0, 256, (height, width), dtype=np.uint8), i)
        for i in range(count)
    ]


def _textured_background(width: int, height: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = 110 + 60 * np.sin(xx / 37.0) * np.cos(yy / 29.0)
    texture = rng.normal(0.0, 22.0, (height, width))
    return np.clip(base + texture, 16, 235).astype(np.uint8)


def moving_texture_clip(
    width: int,
    height: int,
    count: int,
    seed: int = 1,
    step: tuple[int, int] = (2, 1),
) -> list[Frame420]:
    """A textured scene translating by `step` samples per frame.

    The scene is larger than the crop window so frames never wrap.
    """
    dx, dy = step
    margin_x = abs(dx) * count + 8
    margin_y = abs(dy) * count + 8
    scene = _textured_background(width + 2 * margin_x, height + 2 * margin_y, seed)
    frames = []
    for i in range(count):
        x0 = margin_x + dx * i
        y0 = margin_y + dy * i
        crop = scene[y0 : y0 + height, x0 : x0 + width]
        frames.append(_frame(crop.copy(), i))
    return frames


def transient_clip(
    width: int = 384,
    height: int = 256,
    count: int = 9,
    seed: int = 7,
    patch_value: int = 235,
    patch_frames: tuple[int, ...] = (7, 8),
) -> list[Frame420]:
    """Static textured background with one flat square visible only on
    `patch_frames`.  On the last gated frame the square matches its
    distance-1 neighbor but not its distance-2 neighbor, so its CTU's
    importance collapses quickly while the rest of the picture is static.
    """
    bg = _textured_background(width, height, seed)
    px, py, ps = TRANSIENT_PATCH
    frames = []
    for i in range(count):
        y = bg.copy()
        if i in patch_frames:
            y[py : py + ps, px : px + ps] = patch_value
        frames.append(_frame(y, i))
    return frames
