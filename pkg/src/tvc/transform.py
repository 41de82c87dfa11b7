"""8x8 orthonormal DCT, HEVC-style quantization step law, sample rounding."""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn

__all__ = [
    "dct8",
    "idct8",
    "qstep",
    "quantize",
    "dequantize",
    "round_half_away",
    "ZIGZAG",
]


def dct8(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D DCT-II of one or more 8x8 blocks (last two axes)."""
    return dctn(np.asarray(block, dtype=np.float64), axes=(-2, -1), norm="ortho")


def idct8(coef: np.ndarray) -> np.ndarray:
    """Inverse of dct8."""
    return idctn(np.asarray(coef, dtype=np.float64), axes=(-2, -1), norm="ortho")


def qstep(qp: int) -> float:
    """Quantization step 2^((qp-4)/6) for qp in [0, 63]."""
    if not 0 <= qp <= 63:
        raise ValueError(f"qp must be in [0, 63], got {qp}")
    return float(2.0 ** ((qp - 4) / 6.0))


def round_half_away(x):
    """Round half away from zero (scalar or array), as plain rounding tables expect."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize(coef, step: float) -> np.ndarray:
    """Uniform quantization with round-half-away-from-zero."""
    return round_half_away(np.asarray(coef, dtype=np.float64) / step).astype(np.int64)


def dequantize(level, step: float) -> np.ndarray:
    """Reconstruction value of quantized levels."""
    return np.asarray(level, dtype=np.float64) * step


def _zigzag_order(n: int = 8) -> np.ndarray:
    coords = sorted(
        ((i, j) for i in range(n) for j in range(n)),
        key=lambda ij: (ij[0] + ij[1], ij[1] if (ij[0] + ij[1]) % 2 == 0 else ij[0]),
    )
    return np.array([i * n + j for i, j in coords], dtype=np.int64)


# Flat indices of the 8x8 zigzag scan (JPEG orientation: (0,0), (0,1), (1,0), ...).
ZIGZAG = _zigzag_order()
