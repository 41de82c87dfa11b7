"""Trainer-side reader/writer for the NNWF weights interchange format.

Implemented against the wire contract (magic `NNW1`, u32 count, then per
tensor: u16 name length, ASCII name, u8 rank, u32 extents, little-endian
f32 data) rather than shared code, since the codec and the trainer only
meet at the file boundary.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"NNW1"


def write_nnwf(tensors: dict[str, np.ndarray]) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<I", len(tensors))
    for name, tensor in tensors.items():
        raw = name.encode("ascii")
        arr = np.ascontiguousarray(tensor, dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"tensor {name!r} contains non-finite values")
        out += struct.pack("<H", len(raw))
        out += raw
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    return bytes(out)


def read_nnwf(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise ValueError(f"bad NNWF magic {data[:4]!r}")
    (count,) = struct.unpack_from("<I", data, 4)
    pos = 8
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode("ascii")
        pos += name_len
        (rank,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        n = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape)
        pos += 4 * n
        tensors[name] = arr.astype(np.float32)
    if pos != len(data):
        raise ValueError(f"unexpected {len(data) - pos} trailing bytes")
    return tensors
