"""Pluggable lossless coders for packed index planes.

The residual path needs a lossless image coder that accepts more than 16
bits per sample; any such coder slots in here. Two reference backends
ship:

* ``STORE``   - fixed-width bit packing at ceil(log2 alphabet) bits per
  sample (minimum 1), MSB first. Its size is an exact closed-form
  function of the geometry and alphabet, which makes packing gains
  directly measurable.
* ``MED_RICE`` - median-edge-detector prediction plus adaptive Rice
  coding, representative of real predictive coders.

Wire layout of a plane codestream: backend id byte, varint width, varint
height, bits-per-sample byte, varint payload length, payload.
"""

from __future__ import annotations

import enum

import numpy as np

from . import _rice
from .bitio import read_varint, write_varint
from .errors import BackendFormatError, UnsupportedError
from .histogram_pack import IndexPlane

_MAX_BITS = 30
_MAX_PIXELS = 1 << 24  # decode allocation cap


class BackendId(enum.IntEnum):
    STORE = 0
    MED_RICE = 1


def med_predict(left: int, above: int, above_left: int) -> int:
    """Median-edge-detector prediction from the three causal neighbors."""
    lo, hi = min(left, above), max(left, above)
    if above_left <= lo:
        return hi
    if above_left >= hi:
        return lo
    return left + above - above_left


def _bits_for_alphabet(alphabet_size: int) -> int:
    return max(1, int(alphabet_size - 1).bit_length())


def _header(backend: BackendId, width: int, height: int, bits: int, payload_len: int) -> bytes:
    out = bytearray([int(backend)])
    write_varint(out, width)
    write_varint(out, height)
    out.append(bits)
    write_varint(out, payload_len)
    return bytes(out)


def store_size(width: int, height: int, alphabet_size: int) -> int:
    """Exact byte size of a STORE codestream for the given geometry."""
    bits = _bits_for_alphabet(alphabet_size)
    payload = (width * height * bits + 7) // 8
    return len(_header(BackendId.STORE, width, height, bits, payload)) + payload


def encode_plane(idx: IndexPlane, backend: BackendId = BackendId.MED_RICE) -> bytes:
    """Encode an index plane; :func:`decode_plane` inverts bit-exactly."""
    backend = BackendId(backend)
    samples = idx.samples
    if samples.size == 0:
        raise ValueError("cannot encode an empty plane")
    bits = _bits_for_alphabet(idx.alphabet_size)
    if bits > _MAX_BITS:
        raise UnsupportedError(f"alphabet needs {bits} bits, limit {_MAX_BITS}")
    if int(samples.min()) < 0 or int(samples.max()) >= 1 << bits:
        raise ValueError("sample outside declared alphabet")
    if backend == BackendId.STORE:
        payload = _store_pack(samples.astype(np.uint32), bits)
    else:
        buf = np.empty(samples.size * 8 + 64, dtype=np.uint8)
        n = _rice.rice_encode(samples.astype(np.int64), buf)
        payload = buf[:n].tobytes()
    return _header(backend, idx.width, idx.height, bits, len(payload)) + payload


def decode_plane(data: bytes) -> IndexPlane:
    """Decode a plane codestream; errors are classified, never crashes."""
    if len(data) < 4:
        raise BackendFormatError("plane codestream too short")
    if data[0] not in BackendId._value2member_map_:
        raise UnsupportedError(f"unknown backend id {data[0]}")
    backend = BackendId(data[0])
    try:
        width, pos = read_varint(data, 1)
        height, pos = read_varint(data, pos)
        if pos >= len(data):
            raise BackendFormatError("plane codestream truncated")
        bits = data[pos]
        payload_len, pos = read_varint(data, pos + 1)
    except BackendFormatError:
        raise
    except Exception as exc:
        raise BackendFormatError(f"bad plane header: {exc}") from exc
    if width < 1 or height < 1 or width * height > _MAX_PIXELS:
        raise BackendFormatError("bad plane dimensions")
    if not 1 <= bits <= _MAX_BITS:
        raise BackendFormatError(f"bits per sample {bits} out of range")
    payload = data[pos:]
    if len(payload) != payload_len:
        raise BackendFormatError("plane payload length mismatch")
    if backend == BackendId.STORE:
        samples = _store_unpack(payload, width, height, bits)
    else:
        out = np.zeros((height, width), dtype=np.int64)
        status, used = _rice.rice_decode(
            np.frombuffer(payload, dtype=np.uint8), out
        )
        if status != _rice.OK:
            raise BackendFormatError("rice stream truncated")
        if used != len(payload):
            raise BackendFormatError("trailing bytes after rice stream")
        if out.size and (int(out.min()) < 0 or int(out.max()) >= 1 << bits):
            raise BackendFormatError("decoded sample overflows bit depth")
        samples = out.astype(np.int32)
    alphabet = int(samples.max()) + 1 if samples.size else 1
    return IndexPlane(samples.astype(np.int32), alphabet)


def _store_pack(samples: np.ndarray, bits: int) -> bytes:
    shifts = np.arange(bits - 1, -1, -1, dtype=np.uint32)
    bitmat = ((samples.reshape(-1, 1) >> shifts) & 1).astype(np.uint8)
    return np.packbits(bitmat.reshape(-1)).tobytes()


def _store_unpack(payload: bytes, width: int, height: int, bits: int) -> np.ndarray:
    n = width * height
    expected = (n * bits + 7) // 8
    if len(payload) != expected:
        raise BackendFormatError(
            f"store payload is {len(payload)} bytes, expected {expected}"
        )
    bitarr = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=n * bits)
    weights = np.left_shift(
        np.uint64(1), np.arange(bits - 1, -1, -1, dtype=np.uint64)
    )
    samples = (bitarr.reshape(n, bits).astype(np.uint64) * weights).sum(axis=1)
    return samples.astype(np.int32).reshape(height, width)
