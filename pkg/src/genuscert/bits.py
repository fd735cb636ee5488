"""Fixed-width bit packing for certificates.

IDs and counts are written with a fixed width derived from the ID range
{1, ..., n^2}; every fragment has a rigid layout so that certificate
bit-lengths are a deterministic function of the content.
"""

from __future__ import annotations


class BitWriter:
    def __init__(self):
        self._bits = []

    def write(self, value: int, width: int):
        if value < 0 or value >= (1 << width):
            raise ValueError(f"value {value} does not fit in {width} bits")
        for i in range(width - 1, -1, -1):
            self._bits.append((value >> i) & 1)
        return self

    def write_flag(self, flag: bool):
        self._bits.append(1 if flag else 0)
        return self

    def __len__(self):
        return len(self._bits)

    def getvalue(self):
        return tuple(self._bits)

    def to_bytes(self):
        out = bytearray()
        for i in range(0, len(self._bits), 8):
            byte = 0
            for b in self._bits[i : i + 8]:
                byte = (byte << 1) | b
            byte <<= (8 - min(8, len(self._bits) - i)) % 8 if len(self._bits) - i < 8 else 0
            out.append(byte)
        return bytes(out)


class BitReader:
    def __init__(self, bits):
        self._bits = tuple(bits)
        self._pos = 0

    def read(self, width: int) -> int:
        if self._pos + width > len(self._bits):
            raise ValueError("read past end of certificate")
        value = 0
        for _ in range(width):
            value = (value << 1) | self._bits[self._pos]
            self._pos += 1
        return value

    def read_flag(self) -> bool:
        return self.read(1) == 1

    def exhausted(self):
        return self._pos == len(self._bits)

    def remaining(self):
        return len(self._bits) - self._pos


def id_width(n: int) -> int:
    """Bits needed for IDs in {0, ..., n^2} (0 reserved for 'none')."""
    return max(1, (n * n).bit_length())
