"""NNWF weights container: named float32 tensors, little-endian on disk.

Layout: magic `NNW1`, u32 tensor count, then per tensor a u16 name length,
ASCII name bytes, u8 rank, rank u32 extents, and row-major f32 data.  No
padding between records.  Load preserves name order; save(load(x)) == x.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import NnwfError

__all__ = ["save_weights", "load_weights", "MAGIC"]

MAGIC = b"NNW1"


def _validate_name(name: str) -> bytes:
    if not name:
        raise NnwfError("tensor name must be non-empty")
    try:
        raw = name.encode("ascii")
    except UnicodeEncodeError:
        raise NnwfError(f"tensor name {name!r} is not ASCII") from None
    if len(raw) > 0xFFFF:
        raise NnwfError(f"tensor name {name!r} is too long")
    return raw


def save_weights(tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize an ordered name->tensor map to NNWF bytes."""
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", len(tensors))
    for name, tensor in tensors.items():
        raw = _validate_name(name)
        arr = np.ascontiguousarray(tensor, dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise NnwfError(f"tensor {name!r} contains non-finite values")
        if arr.ndim > 255:
            raise NnwfError(f"tensor {name!r} rank {arr.ndim} exceeds 255")
        for extent in arr.shape:
            if extent <= 0:
                raise NnwfError(f"tensor {name!r} has a non-positive extent")
        out += struct.pack("<H", len(raw))
        out += raw
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    return bytes(out)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise NnwfError(
                f"truncated NNWF file: needed {n} bytes for {what} at byte "
                f"offset {self.pos}, only {len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk


def load_weights(data: bytes) -> dict[str, np.ndarray]:
    """Parse NNWF bytes into an ordered name->float32-tensor dict."""
    cur = _Cursor(data)
    if cur.take(4, "magic") != MAGIC:
        raise NnwfError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    (count,) = struct.unpack("<I", cur.take(4, "tensor count"))
    tensors: dict[str, np.ndarray] = {}
    for i in range(count):
        (name_len,) = struct.unpack("<H", cur.take(2, f"name length of tensor {i}"))
        raw = cur.take(name_len, f"name of tensor {i}")
        if name_len == 0 or any(b > 127 for b in raw):
            raise NnwfError(f"tensor {i}: invalid name {raw!r}")
        name = raw.decode("ascii")
        if name in tensors:
            raise NnwfError(f"duplicate tensor name {name!r}")
        (rank,) = struct.unpack("<B", cur.take(1, f"rank of {name!r}"))
        shape = struct.unpack(f"<{rank}I", cur.take(4 * rank, f"extents of {name!r}"))
        if any(e == 0 for e in shape):
            raise NnwfError(f"tensor {name!r} has a zero extent")
        n = 1
        for e in shape:
            n *= e
        payload = cur.take(4 * n, f"data of {name!r}")
        arr = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float32)
        if not np.all(np.isfinite(arr)):
            raise NnwfError(f"tensor {name!r} contains non-finite values")
        tensors[name] = arr
    if cur.pos != len(data):
        raise NnwfError(
            f"trailing garbage: {len(data) - cur.pos} bytes after the last "
            f"tensor at byte offset {cur.pos}"
        )
    return tensors
