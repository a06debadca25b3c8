"""Bit-granular reading and writing.

MSB-first bit order, order-0 exp-Golomb codes and RBSP emulation
prevention.  Readers can optionally record a trace of
``(name, bit_offset, width, value)`` tuples which the ``inspect``
command prints.
"""

from __future__ import annotations

import re

from .errors import Malformed, OutOfBits

UE_MAX = (1 << 32) - 2

_ESCAPE_TRIGGER = re.compile(rb"\x00\x00(?=[\x00-\x03])", re.DOTALL)
_ESCAPED = re.compile(rb"\x00\x00\x03", re.DOTALL)
_FORBIDDEN = re.compile(rb"\x00\x00[\x00-\x02]", re.DOTALL)


class BitReader:
    """Cursor over a byte string.  Reading past the end raises OutOfBits."""

    def __init__(self, data: bytes, bit_offset: int = 0, trace: list | None = None):
        self.data = bytes(data)
        if not 0 <= bit_offset <= 8 * len(self.data):
            raise ValueError("bit_offset outside data")
        self.bit_offset = bit_offset
        self.trace = trace

    @property
    def bits_left(self) -> int:
        return 8 * len(self.data) - self.bit_offset

    @property
    def byte_aligned(self) -> bool:
        return self.bit_offset % 8 == 0

    def _record(self, name, start, value):
        if self.trace is not None and name is not None:
            self.trace.append((name, start, self.bit_offset - start, value))

    def read_bits(self, n: int, name: str | None = None) -> int:
        if not 0 <= n <= 32:
            raise ValueError(f"can read 0..32 bits at once, not {n}")
        start = self.bit_offset
        end = start + n
        if end > 8 * len(self.data):
            raise OutOfBits(f"need {n} bits at offset {start}, {self.bits_left} left")
        if n == 0:
            return 0
        first, last = start >> 3, (end + 7) >> 3
        chunk = int.from_bytes(self.data[first:last], "big")
        value = (chunk >> (8 * last - end)) & ((1 << n) - 1)
        self.bit_offset = end
        self._record(name, start, value)
        return value

    u = read_bits

    def read_flag(self, name: str | None = None) -> bool:
        return bool(self.read_bits(1, name))

    def read_ue(self, name: str | None = None) -> int:
        start = self.bit_offset
        zeros = 0
        while self.read_bits(1) == 0:
            zeros += 1
            if zeros > 31:
                raise Malformed(f"exp-Golomb prefix longer than 31 zeros at bit {start}")
        value = (1 << zeros) - 1 + self.read_bits(zeros)
        self._record(name, start, value)
        return value

    def read_bytes(self, n: int, name: str | None = None) -> bytes:
        if not self.byte_aligned:
            raise Malformed("byte read on unaligned cursor")
        if n < 0 or 8 * n > self.bits_left:
            raise OutOfBits(f"need {n} bytes, {self.bits_left // 8} left")
        start = self.bit_offset
        pos = start >> 3
        out = self.data[pos:pos + n]
        self.bit_offset += 8 * n
        self._record(name, start, out.hex())
        return out

    def read_alignment(self, name: str | None = "alignment") -> None:
        """Consume a one bit followed by zero bits up to the next byte boundary."""
        start = self.bit_offset
        if self.read_bits(1) != 1:
            raise Malformed(f"alignment must start with a one bit (bit {start})")
        while not self.byte_aligned:
            if self.read_bits(1) != 0:
                raise Malformed(f"nonzero alignment padding at bit {self.bit_offset - 1}")
        self._record(name, start, None)

    def read_trailing_bits(self) -> None:
        self.read_alignment("rbsp_trailing_bits")
        if self.bits_left:
            raise Malformed(f"{self.bits_left // 8} bytes after rbsp trailing bits")


class BitWriter:
    def __init__(self):
        self._out = bytearray()
        self._acc = 0  # pending bits, fewer than 8
        self._pending = 0

    @property
    def bit_length(self) -> int:
        return 8 * len(self._out) + self._pending

    @property
    def byte_aligned(self) -> bool:
        return self._pending == 0

    def write_bits(self, value: int, n: int) -> None:
        if n < 0:
            raise ValueError("negative width")
        if not 0 <= value < (1 << n) and not (n == 0 and value == 0):
            raise ValueError(f"{value} does not fit in {n} bits")
        acc = (self._acc << n) | value
        total = self._pending + n
        whole, self._pending = divmod(total, 8)
        if whole:
            self._out += (acc >> self._pending).to_bytes(whole, "big")
        self._acc = acc & ((1 << self._pending) - 1)

    u = write_bits

    def write_flag(self, flag: bool) -> None:
        self.write_bits(1 if flag else 0, 1)

    def write_ue(self, value: int) -> None:
        if not 0 <= value <= UE_MAX:
            raise ValueError(f"ue value {value} outside 0..{UE_MAX}")
        code = value + 1
        self.write_bits(code, 2 * code.bit_length() - 1)

    def write_bytes(self, data: bytes) -> None:
        if not self.byte_aligned:
            raise ValueError("byte write on unaligned writer")
        self._out += data

    def write_alignment(self) -> None:
        self.write_bits(1, 1)
        self.write_bits(0, -self.bit_length % 8)

    write_trailing_bits = write_alignment

    def getvalue(self) -> bytes:
        if not self.byte_aligned:
            raise ValueError(f"{self.bit_length} bits written, not byte aligned")
        return bytes(self._out)


def ue_length(value: int) -> int:
    """Number of bits in the exp-Golomb codeword for ``value``."""
    return 2 * (value + 1).bit_length() - 1


def escape_rbsp(raw: bytes) -> bytes:
    """Insert 0x03 after every 00 00 that precedes a byte <= 0x03."""
    raw = bytes(raw)
    if b"\x00\x00" not in raw:
        return raw
    return _ESCAPE_TRIGGER.sub(b"\x00\x00\x03", raw)


def unescape_rbsp(escaped: bytes) -> bytes:
    escaped = bytes(escaped)
    if b"\x00\x00" not in escaped:
        return escaped
    bad = _FORBIDDEN.search(escaped)
    if bad:
        raise Malformed(f"start-code emulation {escaped[bad.start():bad.end()].hex()} at byte {bad.start()}")
    for m in _ESCAPED.finditer(escaped):
        if m.end() >= len(escaped) or escaped[m.end()] > 0x03:
            raise Malformed(f"emulation prevention byte at {m.end() - 1} not followed by a byte <= 0x03")
    return _ESCAPED.sub(b"\x00\x00", escaped)
