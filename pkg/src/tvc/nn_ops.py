"""Deterministic forward-pass primitives: conv2d, PReLU, dense layers.

All math runs in float64 with a fixed tap-accumulation order, so forward
passes are reproducible regardless of BLAS threading.
"""

from __future__ import annotations

import numpy as np

__all__ = ["conv2d", "prelu", "linear"]


def conv2d(x: np.ndarray, weight: np.ndarray, bias=None, dilation=1) -> np.ndarray:
    """2-D cross-correlation, stride 1, zero padding preserving extents.

    x: (C, H, W); weight: (O, C, Kh, Kw) with odd Kh, Kw; bias: (O,) or None;
    dilation: int or (dh, dw).
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    if x.ndim != 3 or w.ndim != 4:
        raise ValueError(f"expected CHW input and OCKhKw kernel, got {x.shape} / {w.shape}")
    cin, h, wd = x.shape
    co, ck, kh, kw = w.shape
    if ck != cin:
        raise ValueError(f"kernel expects {ck} input channels, input has {cin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel extents must be odd, got {kh}x{kw}")
    dh, dw = (dilation, dilation) if np.isscalar(dilation) else dilation
    if dh < 1 or dw < 1:
        raise ValueError(f"dilation must be >= 1, got ({dh}, {dw})")
    ph, pw = dh * (kh - 1) // 2, dw * (kw - 1) // 2

    xp = np.zeros((cin, h + 2 * ph, wd + 2 * pw), dtype=np.float64)
    xp[:, ph : ph + h, pw : pw + wd] = x
    out = np.zeros((co, h, wd), dtype=np.float64)
    for c in range(cin):
        for i in range(kh):
            for j in range(kw):
                window = xp[c, i * dh : i * dh + h, j * dw : j * dw + wd]
                # (O,) taps against one shifted window, accumulated in tap order
                out += w[:, c, i, j][:, None, None] * window[None, :, :]
    if bias is not None:
        b = np.asarray(bias, dtype=np.float64)
        if b.shape != (co,):
            raise ValueError(f"bias shape {b.shape} != ({co},)")
        out += b[:, None, None]
    return out


def prelu(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Channel-wise PReLU.  alpha has one slope per leading-axis channel."""
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    if a.shape != (x.shape[0],):
        raise ValueError(f"alpha shape {a.shape} != ({x.shape[0]},)")
    slope = a.reshape((-1,) + (1,) * (x.ndim - 1))
    return np.where(x > 0, x, slope * x)


def linear(v: np.ndarray, weight: np.ndarray, bias=None) -> np.ndarray:
    """Dense layer y = W v + b with weight shaped (out, in)."""
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    if v.ndim != 1 or w.ndim != 2 or w.shape[1] != v.shape[0]:
        raise ValueError(f"shape mismatch: weight {w.shape} input {v.shape}")
    out = w @ v
    if bias is not None:
        b = np.asarray(bias, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} != ({w.shape[0]},)")
        out = out + b
    return out
