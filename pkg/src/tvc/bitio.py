"""MSB-first bit I/O and order-0 Exp-Golomb codes."""

from __future__ import annotations

from .errors import BitstreamError

__all__ = [
    "BitWriter",
    "BitReader",
    "ue_bits",
    "se_bits",
    "signed_to_unsigned",
    "unsigned_to_signed",
]

_MAX_UE_PREFIX = 32


def signed_to_unsigned(v: int) -> int:
    # 0 -> 0, 1 -> 1, -1 -> 2, 2 -> 3, -2 -> 4, ...
    return 2 * v - 1 if v > 0 else -2 * v


def unsigned_to_signed(u: int) -> int:
    return (u + 1) // 2 if u % 2 else -(u // 2)


def ue_bits(v: int) -> int:
    """Bit length of the order-0 Exp-Golomb code of v >= 0."""
    return 2 * (v + 1).bit_length() - 1


def se_bits(v: int) -> int:
    return ue_bits(signed_to_unsigned(v))


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._n = 0

    def write_bit(self, bit: int) -> None:
        self._acc = (self._acc << 1) | (bit & 1)
        self._n += 1
        if self._n == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._n = 0

    def write_bits(self, value: int, count: int) -> None:
        for shift in range(count - 1, -1, -1):
            self.write_bit((value >> shift) & 1)

    def write_ue(self, v: int) -> None:
        if v < 0:
            raise ValueError(f"unsigned exp-golomb value must be >= 0, got {v}")
        n = v + 1
        k = n.bit_length()
        self.write_bits(0, k - 1)
        self.write_bits(n, k)

    def write_se(self, v: int) -> None:
        self.write_ue(signed_to_unsigned(v))

    def byte_align(self) -> None:
        while self._n:
            self.write_bit(0)

    @property
    def bit_length(self) -> int:
        return 8 * len(self._bytes) + self._n

    def getvalue(self) -> bytes:
        if self._n:
            raise ValueError("writer is not byte-aligned")
        return bytes(self._bytes)


class BitReader:
    def __init__(self, data: bytes, bit_offset: int = 0):
        self._data = data
        self._pos = bit_offset

    @property
    def bit_position(self) -> int:
        return self._pos

    @property
    def byte_position(self) -> int:
        return self._pos // 8

    def read_bit(self) -> int:
        byte = self._pos >> 3
        if byte >= len(self._data):
            raise BitstreamError(
                f"truncated stream: read past end at byte offset {len(self._data)}"
            )
        bit = (self._data[byte] >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count: int) -> int:
        v = 0
        for _ in range(count):
            v = (v << 1) | self.read_bit()
        return v

    def read_ue(self) -> int:
        zeros = 0
        start = self._pos
        while self.read_bit() == 0:
            zeros += 1
            if zeros > _MAX_UE_PREFIX:
                raise BitstreamError(
                    f"malformed exp-golomb prefix at bit offset {start}"
                )
        return (1 << zeros) - 1 + (self.read_bits(zeros) if zeros else 0)

    def read_se(self) -> int:
        return unsigned_to_signed(self.read_ue())

    def byte_align(self) -> None:
        self._pos = (self._pos + 7) & ~7
