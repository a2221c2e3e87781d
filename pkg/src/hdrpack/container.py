"""Single-file container: a baseline JPEG with the extension layer riding
in APP11 marker segments.

Legacy JPEG decoders skip unknown application segments, so the container
renders as the tone-mapped base image anywhere; stripping every APP11
segment yields a byte-identical standalone JPEG. The extension payload is
chunked into segments of at most 65533 payload bytes, each tagged
``HPK1`` plus a big-endian sequence number, inserted right after the
JFIF APP0 segment.

Reassembled extension payload (multi-byte fields little-endian, varints
LEB128):

===========================  ==============================================
magic                        4 bytes ``HPKE``
version                      u8 (currently 1)
pixel_type                   u8
bit_depth                    u8
q                            u8 base-layer quality
transform_id                 u8
backend_id                   u8
table_compressor_id          u8
width, height                varints
pixel_crc                    u32le, CRC-32 of the original planes
curve                        512 bytes (inverse tone-map lookup)
directory                    6 x (varint offset, varint length)
body                         table and plane parts at directory offsets
checksum                     u32le, CRC-32 of every preceding payload byte
===========================  ==============================================

Directory order: unpacking table then plane codestream for component 0,
then components 1 and 2. Offsets are relative to the body start.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .errors import ChecksumError, ContainerFormatError, JpegFormatError, UnsupportedError
from .histogram_pack import TableCompressor
from .image_io import PixelType
from .lossless_backend import BackendId
from .residual import TransformId
from .tonemap import CURVE_BYTES
from .bitio import read_varint, write_varint

MAGIC = b"HPKE"
CHUNK_TAG = b"HPK1"
VERSION = 1
APP11 = 0xEB
MAX_CHUNK = 65533 - 6  # marker length field ceiling minus tag and sequence
_MAX_PIXELS = 1 << 24  # matches the JPEG decoder's allocation cap


@dataclass(frozen=True)
class ExtensionHeader:
    pixel_type: PixelType
    bit_depth: int
    q: int
    transform_id: TransformId
    backend_id: BackendId
    table_compressor_id: TableCompressor
    width: int
    height: int
    pixel_crc: int
    version: int = VERSION


# ---------------------------------------------------------------------------
# JPEG segment walking (header section only; entropy data is never scanned)


def _walk_header_segments(data: bytes):
    """Yield (marker, start, end) for each segment before the scan.

    ``start``/``end`` delimit the whole segment including its marker. The
    walk stops at SOS or EOI; everything after is entropy data plus EOI
    and is handled verbatim by the callers.
    """
    if len(data) < 2 or data[0:2] != b"\xff\xd8":
        raise JpegFormatError("missing SOI marker")
    pos = 2
    n = len(data)
    while True:
        start = pos
        if pos + 2 > n:
            raise JpegFormatError("truncated stream (no SOS/EOI)")
        if data[pos] != 0xFF:
            raise JpegFormatError("expected marker in header section")
        while pos + 1 < n and data[pos + 1] == 0xFF:
            pos += 1
        marker = data[pos + 1]
        pos += 2
        if marker in (0xDA, 0xD9):  # SOS / EOI
            yield marker, start, pos
            return
        if marker == 0x01 or 0xD0 <= marker <= 0xD7:
            yield marker, start, pos
            continue
        if pos + 2 > n:
            raise JpegFormatError("truncated segment length")
        seglen = struct.unpack(">H", data[pos : pos + 2])[0]
        if seglen < 2 or pos + seglen > n:
            raise JpegFormatError("bad segment length")
        pos += seglen
        yield marker, start, pos


def strip_extension(data: bytes) -> bytes:
    """Remove every APP11 segment; the result is a standalone JPEG."""
    out = bytearray(b"\xff\xd8")
    for marker, start, end in _walk_header_segments(data):
        if marker == APP11:
            continue
        if marker in (0xDA, 0xD9):
            out += data[start:]
            return bytes(out)
        out += data[start:end]
    return bytes(out)


# ---------------------------------------------------------------------------
# Mux


def _serialize_header(header: ExtensionHeader) -> bytearray:
    out = bytearray(MAGIC)
    out += bytes(
        [
            header.version,
            int(header.pixel_type),
            header.bit_depth,
            header.q,
            int(header.transform_id),
            int(header.backend_id),
            int(header.table_compressor_id),
        ]
    )
    write_varint(out, header.width)
    write_varint(out, header.height)
    out += struct.pack("<I", header.pixel_crc & 0xFFFFFFFF)
    return out


def build_payload(
    header: ExtensionHeader,
    tables: list[bytes],
    planes: list[bytes],
    curve: bytes,
) -> bytes:
    """Assemble and checksum the extension payload."""
    if len(tables) != 3 or len(planes) != 3:
        raise ValueError("expected one table and one plane per component")
    if len(curve) != CURVE_BYTES:
        raise ValueError(f"curve blob must be {CURVE_BYTES} bytes")
    payload = _serialize_header(header)
    payload += curve
    parts = []
    for c in range(3):
        parts.append(tables[c])
        parts.append(planes[c])
    offset = 0
    for part in parts:
        write_varint(payload, offset)
        write_varint(payload, len(part))
        offset += len(part)
    for part in parts:
        payload += part
    payload += struct.pack("<I", zlib.crc32(bytes(payload)) & 0xFFFFFFFF)
    return bytes(payload)


def mux(
    jpeg: bytes,
    header: ExtensionHeader,
    tables: list[bytes],
    planes: list[bytes],
    curve: bytes,
) -> bytes:
    """Embed the extension payload into the JPEG as APP11 chunks."""
    payload = build_payload(header, tables, planes, curve)
    nchunks = (len(payload) + MAX_CHUNK - 1) // MAX_CHUNK
    if nchunks > 65536:
        raise ContainerFormatError("extension payload exceeds chunking capacity")

    insert_at = 2
    for marker, start, end in _walk_header_segments(jpeg):
        if marker == APP11:
            raise ContainerFormatError("base JPEG already carries APP11 segments")
        if marker == 0xE0 and insert_at == 2:
            insert_at = end  # after the JFIF APP0
    segments = bytearray()
    for seq in range(nchunks):
        chunk = payload[seq * MAX_CHUNK : (seq + 1) * MAX_CHUNK]
        segments += b"\xff" + bytes([APP11])
        segments += struct.pack(">H", 2 + 6 + len(chunk))
        segments += CHUNK_TAG + struct.pack(">H", seq)
        segments += chunk
    return jpeg[:insert_at] + bytes(segments) + jpeg[insert_at:]


# ---------------------------------------------------------------------------
# Demux


def _collect_chunks(data: bytes) -> bytes:
    chunks: dict[int, bytes] = {}
    for marker, start, end in _walk_header_segments(data):
        if marker in (0xDA, 0xD9):
            break
        if marker != APP11:
            continue
        body_start = start
        # skip any fill bytes counted into the segment span
        while data[body_start] == 0xFF and data[body_start + 1] == 0xFF:
            body_start += 1
        body = data[body_start + 4 : end]
        if len(body) < 6 or body[:4] != CHUNK_TAG:
            continue  # foreign APP11 segment, not ours
        seq = struct.unpack(">H", body[4:6])[0]
        if seq in chunks:
            raise ContainerFormatError(f"duplicate extension chunk {seq}")
        chunks[seq] = body[6:]
    if not chunks:
        raise ContainerFormatError("no extension chunks found")
    if sorted(chunks) != list(range(len(chunks))):
        raise ContainerFormatError("missing extension chunk")
    for seq in range(len(chunks) - 1):
        if len(chunks[seq]) != MAX_CHUNK:
            raise ContainerFormatError("short extension chunk before the last")
    return b"".join(chunks[i] for i in range(len(chunks)))


def _parse_header(payload: bytes) -> tuple[ExtensionHeader, int]:
    if len(payload) < 4 or payload[:4] != MAGIC:
        raise ContainerFormatError("bad extension magic")
    if len(payload) < 11:
        raise ContainerFormatError("extension header truncated")
    version = payload[4]
    if version != VERSION:
        raise UnsupportedError(f"unsupported container version {version}")
    pixel_type, bit_depth, q, transform_id, backend_id, compressor_id = payload[5:11]
    if pixel_type not in PixelType._value2member_map_:
        raise UnsupportedError(f"unknown pixel type {pixel_type}")
    if transform_id not in TransformId._value2member_map_:
        raise UnsupportedError(f"unknown transform id {transform_id}")
    if backend_id not in BackendId._value2member_map_:
        raise UnsupportedError(f"unknown backend id {backend_id}")
    if compressor_id not in TableCompressor._value2member_map_:
        raise UnsupportedError(f"unknown table compressor id {compressor_id}")
    pixel_type = PixelType(pixel_type)
    if pixel_type == PixelType.HALF_FLOAT and bit_depth != 16:
        raise ContainerFormatError("half-float images must declare bit depth 16")
    if not 1 <= bit_depth <= 16:
        raise ContainerFormatError(f"bad bit depth {bit_depth}")
    if q > 100:
        raise ContainerFormatError(f"bad quality value {q}")
    width, pos = read_varint(payload, 11)
    height, pos = read_varint(payload, pos)
    if width < 1 or height < 1 or width * height > _MAX_PIXELS:
        raise ContainerFormatError("bad image dimensions in header")
    if pos + 4 > len(payload):
        raise ContainerFormatError("extension header truncated")
    pixel_crc = struct.unpack("<I", payload[pos : pos + 4])[0]
    header = ExtensionHeader(
        pixel_type=pixel_type,
        bit_depth=bit_depth,
        q=q,
        transform_id=TransformId(transform_id),
        backend_id=BackendId(backend_id),
        table_compressor_id=TableCompressor(compressor_id),
        width=width,
        height=height,
        pixel_crc=pixel_crc,
        version=version,
    )
    return header, pos + 4


def parse_payload(
    payload: bytes,
) -> tuple[ExtensionHeader, list[bytes], list[bytes], bytes]:
    """Validate the checksum and split the payload into its parts."""
    if len(payload) < 4:
        raise ContainerFormatError("extension payload truncated")
    stored = struct.unpack("<I", payload[-4:])[0]
    if zlib.crc32(payload[:-4]) & 0xFFFFFFFF != stored:
        raise ChecksumError("extension payload checksum mismatch")
    header, pos = _parse_header(payload)
    if pos + CURVE_BYTES > len(payload) - 4:
        raise ContainerFormatError("extension payload truncated")
    curve = payload[pos : pos + CURVE_BYTES]
    pos += CURVE_BYTES
    entries = []
    for _ in range(6):
        offset, pos = read_varint(payload, pos)
        length, pos = read_varint(payload, pos)
        entries.append((offset, length))
    body = payload[pos : len(payload) - 4]
    last_end = 0
    parts = []
    for offset, length in entries:
        if offset < last_end:
            raise ContainerFormatError("overlapping directory entries")
        if offset + length > len(body):
            raise ContainerFormatError("directory entry out of bounds")
        parts.append(body[offset : offset + length])
        last_end = offset + length
    tables = [parts[0], parts[2], parts[4]]
    planes = [parts[1], parts[3], parts[5]]
    return header, tables, planes, curve


def demux(
    data: bytes,
) -> tuple[bytes, ExtensionHeader, list[bytes], list[bytes], bytes]:
    """Split a container into (base JPEG, header, tables, planes, curve).

    Exact inverse of :func:`mux`: the returned JPEG equals the muxed one
    byte for byte and each part is returned unmodified.
    """
    payload = _collect_chunks(data)
    header, tables, planes, curve = parse_payload(payload)
    return strip_extension(data), header, tables, planes, curve
