"""Synthetic raw I420 clips for dataset generation (no codec dependency)."""

from __future__ import annotations

import numpy as np


def _i420_bytes(frames_y: list[np.ndarray], chroma_value: int = 128) -> bytes:
    out = bytearray()
    for y in frames_y:
        h, w = y.shape
        c = np.full((h // 2, w // 2), chroma_value, dtype=np.uint8)
        out += y.astype(np.uint8).tobytes()
        out += c.tobytes()
        out += c.tobytes()
    return bytes(out)


def structured_clip(width: int, height: int, count: int, seed: int) -> bytes:
    """Smooth gradients, broad bumps and low-frequency waves translating
    slowly.  Coarse quantization turns these into banding and blocking,
    which is exactly the kind of error a restoration filter can learn to
    undo at toy scale."""
    rng = np.random.default_rng(seed)
    mw, mh = width + 4 * count + 16, height + 4 * count + 16
    yy, xx = np.mgrid[0:mh, 0:mw].astype(np.float64)
    scene = 96 + rng.uniform(-0.6, 0.6) * xx + rng.uniform(-0.6, 0.6) * yy
    for _ in range(8):
        cx, cy = rng.uniform(0, mw), rng.uniform(0, mh)
        amp = rng.uniform(40, 80) * rng.choice([-1, 1])
        sigma = rng.uniform(18, 50)
        scene += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2))
    scene += 10 * np.sin(xx / 47.0 + rng.uniform(0, 6)) * np.cos(yy / 41.0 + rng.uniform(0, 6))
    scene = np.clip(scene, 10, 245).astype(np.uint8)
    frames = []
    for i in range(count):
        x0, y0 = 8 + 2 * i, 8 + i
        frames.append(scene[y0 : y0 + height, x0 : x0 + width].copy())
    return _i420_bytes(frames)


def gradient_clip(width: int, height: int, count: int, seed: int) -> bytes:
    """Smooth directional ramps with varying orientation per frame region;
    the fixture family for intra-prediction training and evaluation."""
    rng = np.random.default_rng(seed)
    frames = []
    for i in range(count):
        yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
        a = rng.uniform(-2.5, 2.5)
        b = rng.uniform(-2.5, 2.5)
        base = rng.uniform(60, 180)
        y = base + a * xx + b * yy + 12 * np.sin((xx + 7 * i) / 19.0)
        frames.append(np.clip(y, 0, 255).astype(np.uint8))
    return _i420_bytes(frames)
