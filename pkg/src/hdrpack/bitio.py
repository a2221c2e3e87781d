"""Byte-level primitives shared by the wire formats: LEB128 varints and
zigzag signed mapping.

All multi-byte extension-layer fields are little-endian; varints are
unsigned LEB128 (7 data bits per byte, high bit set on continuation).
"""

from __future__ import annotations

from .errors import ContainerFormatError

# Varints larger than this are rejected (10 bytes cover 64 bits).
_MAX_VARINT_BYTES = 10


def write_varint(out: bytearray, value: int) -> None:
    """Append an unsigned LEB128 varint."""
    if value < 0:
        raise ValueError("varint value must be non-negative")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def read_varint(data: bytes, pos: int) -> tuple[int, int]:
    """Read an unsigned LEB128 varint at ``pos``; returns (value, next_pos)."""
    value = 0
    shift = 0
    for i in range(_MAX_VARINT_BYTES):
        if pos + i >= len(data):
            raise ContainerFormatError("truncated varint")
        b = data[pos + i]
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos + i + 1
        shift += 7
    raise ContainerFormatError("varint too long")


def zigzag(n: int) -> int:
    """Map a signed integer to an unsigned one (0,-1,1,-2,... -> 0,1,2,3,...)."""
    return (n << 1) if n >= 0 else ((-n << 1) - 1)


def unzigzag(u: int) -> int:
    """Inverse of :func:`zigzag`."""
    return (u >> 1) if (u & 1) == 0 else -((u + 1) >> 1)


def write_svarint(out: bytearray, value: int) -> None:
    """Append a zigzag-signed varint."""
    write_varint(out, zigzag(value))


def read_svarint(data: bytes, pos: int) -> tuple[int, int]:
    """Read a zigzag-signed varint; returns (value, next_pos)."""
    u, pos = read_varint(data, pos)
    return unzigzag(u), pos
