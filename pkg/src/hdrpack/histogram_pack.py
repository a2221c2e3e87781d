"""Histogram sparseness and reversible histogram packing.

A plane of signed integer values typically occupies only a small subset X
of its range D = max - min + 1; the sparseness alpha = |X| / D measures
how small. Packing remaps each occupied value to its rank in X, producing
an index plane whose own histogram is dense (alpha exactly 1) and whose
range |X| is never larger than D. The sorted list of occupied values (the
unpacking table) inverts the map; it is strictly increasing, so it is
stored as a first value plus positive deltas, then squeezed by a
general-purpose compressor.
"""

from __future__ import annotations

import bz2
import enum
import zlib
from dataclasses import dataclass

import numpy as np

from .bitio import read_svarint, read_varint, write_svarint, write_varint
from .errors import PackingError, TableFormatError, UnsupportedError


class TableCompressor(enum.IntEnum):
    """Compressor applied to the DPCM-coded unpacking table."""

    RAW = 0
    DEFLATE = 1
    BZIP2 = 2


# Bound on decoded table values; generous next to the 18-bit signed range
# transformed residuals can reach, tight enough to reject corrupt streams.
_MAX_TABLE_VALUE = 1 << 40


@dataclass(frozen=True)
class SparseHistogram:
    """Occupied values (sorted) and their positive counts."""

    values: np.ndarray  # int64, strictly increasing
    counts: np.ndarray  # int64, all > 0

    @property
    def min_value(self) -> int:
        return int(self.values[0])

    @property
    def max_value(self) -> int:
        return int(self.values[-1])

    @property
    def occupied(self) -> int:
        return len(self.values)

    def as_dict(self) -> dict[int, int]:
        return {int(v): int(c) for v, c in zip(self.values, self.counts)}


@dataclass(frozen=True)
class SparsenessReport:
    occupied: int
    range: int
    alpha: float


@dataclass(frozen=True)
class UnpackingTable:
    """Strictly increasing list of occupied values; values[index] inverts
    the packing map."""

    values: np.ndarray  # int64

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("unpacking table cannot be empty")
        if len(self.values) > 1 and not (np.diff(self.values) > 0).all():
            raise ValueError("unpacking table must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class PackingMap:
    """Value-to-index map restricted to the occupied values."""

    values: np.ndarray  # int64, strictly increasing

    def __len__(self) -> int:
        return len(self.values)

    def index_of(self, value: int) -> int:
        """Index of a single occupied value (mainly for tests/debugging)."""
        i = int(np.searchsorted(self.values, value))
        if i >= len(self.values) or self.values[i] != value:
            raise PackingError(f"value {value} not present in packing map")
        return i


@dataclass(frozen=True)
class IndexPlane:
    """Packed plane: indices in [0, alphabet_size), dense by construction."""

    samples: np.ndarray  # int32, shape (h, w)
    alphabet_size: int

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]


def build_histogram(plane: np.ndarray) -> SparseHistogram:
    """Tally a plane into a sparse histogram (zero bins absent)."""
    plane = np.asarray(plane)
    if plane.size == 0:
        raise ValueError("cannot build histogram of an empty plane")
    values, counts = np.unique(plane.astype(np.int64), return_counts=True)
    return SparseHistogram(values, counts.astype(np.int64))


def sparseness(h: SparseHistogram) -> SparsenessReport:
    """Occupied-bin count, value range and their ratio alpha in (0, 1]."""
    rng = h.max_value - h.min_value + 1
    return SparsenessReport(h.occupied, rng, h.occupied / rng)


def build_packing(h: SparseHistogram) -> tuple[PackingMap, UnpackingTable]:
    """Build the rank map over occupied values and its inverse table.

    The map sends the minimum occupied value to 0 and each further occupied
    value to the previous index plus one, so it is a monotone bijection
    onto [0, occupied).
    """
    values = h.values.copy()
    return PackingMap(values), UnpackingTable(values)


def pack_plane(plane: np.ndarray, pmap: PackingMap) -> IndexPlane:
    """Replace every value by its index; errors if a value is unmapped."""
    plane = np.asarray(plane, dtype=np.int64)
    if plane.ndim != 2:
        raise ValueError("plane must be two-dimensional")
    idx = np.searchsorted(pmap.values, plane)
    idx_clipped = np.minimum(idx, len(pmap.values) - 1)
    if not np.array_equal(pmap.values[idx_clipped], plane):
        bad = plane[pmap.values[idx_clipped] != plane].flat[0]
        raise PackingError(f"plane value {int(bad)} not present in packing map")
    return IndexPlane(idx.astype(np.int32), len(pmap.values))


def unpack_plane(idx: IndexPlane, table: UnpackingTable) -> np.ndarray:
    """Exact inverse of :func:`pack_plane`; errors on out-of-range indices."""
    samples = idx.samples
    if samples.size and (
        int(samples.min()) < 0 or int(samples.max()) >= len(table)
    ):
        raise PackingError("index out of unpacking-table range")
    return table.values[samples]


def _compress(blob: bytes, compressor: TableCompressor) -> bytes:
    if compressor == TableCompressor.RAW:
        return blob
    if compressor == TableCompressor.DEFLATE:
        return zlib.compress(blob, 9)
    if compressor == TableCompressor.BZIP2:
        return bz2.compress(blob, 9)
    raise UnsupportedError(f"unknown table compressor id {compressor}")


def _decompress(blob: bytes, compressor: int) -> bytes:
    if compressor == TableCompressor.RAW:
        return blob
    try:
        if compressor == TableCompressor.DEFLATE:
            return zlib.decompress(blob)
        if compressor == TableCompressor.BZIP2:
            return bz2.decompress(blob)
    except (zlib.error, OSError, ValueError, EOFError) as exc:
        raise TableFormatError(f"table blob does not decompress: {exc}") from exc
    raise UnsupportedError(f"unknown table compressor id {compressor}")


def encode_table(
    table: UnpackingTable,
    compressor: TableCompressor = TableCompressor.DEFLATE,
) -> bytes:
    """Serialize a table: compressor id byte, zigzag varint of the first
    value, varint entry count, then the compressed stream of positive
    varint deltas."""
    values = table.values
    out = bytearray([int(TableCompressor(compressor))])
    write_svarint(out, int(values[0]))
    write_varint(out, len(values))
    deltas = bytearray()
    for d in np.diff(values):
        write_varint(deltas, int(d))
    out += _compress(bytes(deltas), TableCompressor(compressor))
    return bytes(out)


def decode_table(data: bytes) -> UnpackingTable:
    """Exact inverse of :func:`encode_table`."""
    if len(data) < 3:
        raise TableFormatError("table stream too short")
    compressor = data[0]
    if compressor not in TableCompressor._value2member_map_:
        raise UnsupportedError(f"unknown table compressor id {compressor}")
    try:
        first, pos = read_svarint(data, 1)
        count, pos = read_varint(data, pos)
    except Exception as exc:
        raise TableFormatError(f"bad table header: {exc}") from exc
    if count < 1:
        raise TableFormatError("table entry count must be positive")
    if abs(first) > _MAX_TABLE_VALUE:
        raise TableFormatError("table value out of range")
    deltas_blob = _decompress(data[pos:], compressor)
    if count - 1 > len(deltas_blob):  # every delta takes at least one byte
        raise TableFormatError("table entry count exceeds delta stream")
    values = [first]
    current = first
    dpos = 0
    for _ in range(count - 1):
        try:
            d, dpos = read_varint(deltas_blob, dpos)
        except Exception as exc:
            raise TableFormatError("truncated table delta stream") from exc
        if d < 1:
            raise TableFormatError("table delta must be strictly positive")
        current += d
        if current > _MAX_TABLE_VALUE:
            raise TableFormatError("table value out of range")
        values.append(current)
    if dpos != len(deltas_blob):
        raise TableFormatError("trailing bytes after table deltas")
    try:
        return UnpackingTable(np.array(values, dtype=np.int64))
    except ValueError as exc:
        raise TableFormatError(str(exc)) from exc
