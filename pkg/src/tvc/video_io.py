"""Raw 4:2:0 video ingestion/emission, frame containers, and PSNR.

The on-disk format is headerless planar I420: for every frame the full
Y plane, then Cb, then Cr, 8 bits per sample, row-major.  Sequence PSNR
is the mean of per-frame luma PSNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import YuvError

__all__ = [
    "Plane",
    "Frame420",
    "read_yuv420",
    "write_yuv420",
    "psnr",
    "sequence_y_psnr",
]


def _as_samples(plane) -> np.ndarray:
    """Accept a Plane or a 2-D uint8 array and return the sample array."""
    if isinstance(plane, Plane):
        return plane.samples
    arr = np.asarray(plane)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D sample array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Plane:
    """One 8-bit sample plane.  Immutable after construction."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise ValueError(f"plane must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"plane samples must be integers, got {arr.dtype}")
            if arr.size and (int(arr.min()) < 0 or int(arr.max()) > 255):
                raise ValueError("plane samples out of range [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def data(self) -> bytes:
        """Row-major sample bytes (length == width * height)."""
        return self.samples.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Plane):
            return NotImplemented
        return self.samples.shape == other.samples.shape and bool(
            np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True)
class Frame420:
    """One 4:2:0 picture: luma plane, two chroma planes, display-order index."""

    y: Plane
    cb: Plane
    cr: Plane
    poc: int

    def __post_init__(self):
        cw = (self.y.width + 1) // 2
        ch = (self.y.height + 1) // 2
        for name, plane in (("cb", self.cb), ("cr", self.cr)):
            if plane.width != cw or plane.height != ch:
                raise ValueError(
                    f"{name} plane is {plane.width}x{plane.height}, "
                    f"expected {cw}x{ch} for a {self.y.width}x{self.y.height} luma"
                )
        if self.poc < 0:
            raise ValueError(f"poc must be non-negative, got {self.poc}")

    @property
    def width(self) -> int:
        return self.y.width

    @property
    def height(self) -> int:
        return self.y.height

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame420):
            return NotImplemented
        return (
            self.poc == other.poc
            and self.y == other.y
            and self.cb == other.cb
            and self.cr == other.cr
        )


def frame_from_arrays(y, cb, cr, poc: int) -> Frame420:
    """Build a Frame420 from 2-D uint8 arrays."""
    return Frame420(Plane(y), Plane(cb), Plane(cr), poc)


def read_yuv420(source, width: int, height: int) -> list[Frame420]:
    """Read a headerless I420 byte stream into frames with poc = stream index.

    `source` may be bytes or a binary file object.  A trailing partial frame
    is an error naming the byte offset where the full frame would have ended.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = bytes(source)
    if width <= 0 or height <= 0:
        raise YuvError(f"invalid dimensions {width}x{height}")
    if width % 2 or height % 2:
        raise YuvError(f"odd dimensions {width}x{height} are not valid 4:2:0")

    luma_size = width * height
    chroma_size = (width // 2) * (height // 2)
    frame_size = luma_size + 2 * chroma_size
    if len(data) % frame_size:
        n_whole = len(data) // frame_size
        raise YuvError(
            f"truncated stream: {len(data)} bytes is not a multiple of the "
            f"{frame_size}-byte frame size; frame {n_whole} is incomplete at "
            f"byte offset {n_whole * frame_size}"
        )

    frames = []
    for poc in range(len(data) // frame_size):
        base = poc * frame_size
        y = np.frombuffer(data, np.uint8, luma_size, base).reshape(height, width)
        cb = np.frombuffer(data, np.uint8, chroma_size, base + luma_size)
        cr = np.frombuffer(data, np.uint8, chroma_size, base + luma_size + chroma_size)
        frames.append(
            Frame420(
                Plane(y.copy()),
                Plane(cb.reshape(height // 2, width // 2).copy()),
                Plane(cr.reshape(height // 2, width // 2).copy()),
                poc,
            )
        )
    return frames


def write_yuv420(frames: list[Frame420]) -> bytes:
    """Serialize frames as a headerless I420 byte stream (read round-trips)."""
    if not frames:
        return b""
    w, h = frames[0].width, frames[0].height
    out = bytearray()
    for f in frames:
        if f.width != w or f.height != h:
            raise YuvError(
                f"mixed frame dimensions: {f.width}x{f.height} vs {w}x{h}"
            )
        out += f.y.data
        out += f.cb.data
        out += f.cr.data
    return bytes(out)


def psnr(reference, test) -> float:
    """Peak signal-to-noise ratio in dB; math.inf when the planes are equal.

    Defined as 10*log10(255^2 / MSE) over all samples of one plane.
    """
    ref = _as_samples(reference)
    tst = _as_samples(test)
    if ref.shape != tst.shape:
        raise ValueError(f"plane dimensions differ: {ref.shape} vs {tst.shape}")
    diff = ref.astype(np.int64) - tst.astype(np.int64)
    sse = int(np.sum(diff * diff))
    if sse == 0:
        return math.inf
    mse = sse / ref.size
    return 10.0 * math.log10(255.0 * 255.0 / mse)


def sequence_y_psnr(reference: list[Frame420], test: list[Frame420]) -> float:
    """Mean per-frame luma PSNR over two equal-length frame lists."""
    if len(reference) != len(test):
        raise ValueError(f"frame counts differ: {len(reference)} vs {len(test)}")
    if not reference:
        raise ValueError("empty sequence")
    values = [psnr(r.y, t.y) for r, t in zip(reference, test)]
    return sum(values) / len(values)
