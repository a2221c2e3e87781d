"""Container multiplexing: chunking, stripping, checksums, robustness."""

import struct
import zlib

import numpy as np
import pytest

from hdrpack import (
    BackendId,
    ChecksumError,
    CodecError,
    ContainerFormatError,
    ExtensionHeader,
    PixelType,
    TableCompressor,
    TransformId,
    UnsupportedError,
    demux,
    jpeg_decode,
    jpeg_encode,
    mux,
    strip_extension,
)
from hdrpack.container import CHUNK_TAG, MAX_CHUNK, build_payload
from hdrpack.image_io import LdrImage

import markers


def _header(w=8, h=8, **kw):
    fields = dict(
        pixel_type=PixelType.INTEGER,
        bit_depth=12,
        q=80,
        transform_id=TransformId.REVERSIBLE_YCBCR,
        backend_id=BackendId.MED_RICE,
        table_compressor_id=TableCompressor.DEFLATE,
        width=w,
        height=h,
        pixel_crc=0xDEADBEEF,
    )
    fields.update(kw)
    return ExtensionHeader(**fields)


def _jpeg(rng, w=8, h=8, q=80):
    planes = rng.integers(0, 256, (3, h, w)).astype(np.uint8)
    return jpeg_encode(LdrImage(w, h, planes), q)


def _parts(rng, table_len=20, plane_len=100):
    tables = [bytes([1]) + rng.bytes(table_len - 1) for _ in range(3)]
    planes = [bytes([1]) + rng.bytes(plane_len - 1) for _ in range(3)]
    curve = rng.bytes(512)
    return tables, planes, curve


def _app11_segments(data):
    segs = []
    pos = 2
    while pos + 4 <= len(data):
        if data[pos] != 0xFF:
            break
        marker = data[pos + 1]
        if marker in (0xDA, 0xD9):
            break
        seglen = struct.unpack(">H", data[pos + 2 : pos + 4])[0]
        if marker == 0xEB:
            segs.append(data[pos : pos + 2 + seglen])
        pos += 2 + seglen
    return segs


def test_mux_demux_identity(rng):
    jpeg = _jpeg(rng)
    tables, planes, curve = _parts(rng)
    header = _header()
    container = mux(jpeg, header, tables, planes, curve)
    jpeg2, header2, tables2, planes2, curve2 = demux(container)
    assert jpeg2 == jpeg
    assert header2 == header
    assert tables2 == tables
    assert planes2 == planes
    assert curve2 == curve


def test_mux_demux_identity_fuzzed_parts():
    from hypothesis import given, strategies as st

    @given(
        seed=st.integers(0, 2**31),
        sizes=st.lists(st.integers(0, 3000), min_size=6, max_size=6),
    )
    def run(seed, sizes):
        rng = np.random.default_rng(seed)
        jpeg = _jpeg(rng)
        tables = [rng.bytes(sizes[i]) for i in range(3)]
        planes = [rng.bytes(sizes[3 + i]) for i in range(3)]
        curve = rng.bytes(512)
        out = demux(mux(jpeg, _header(), tables, planes, curve))
        assert out == (jpeg, _header(), tables, planes, curve)

    run()


def test_zero_length_part_roundtrips(rng):
    jpeg = _jpeg(rng)
    tables = [b"", b"x", b"yy"]
    planes = [b"abc", b"", b"z"]
    curve = bytes(512)
    _, _, tables2, planes2, _ = demux(mux(jpeg, _header(), tables, planes, curve))
    assert tables2 == tables and planes2 == planes


def test_large_payload_chunking(rng):
    jpeg = _jpeg(rng)
    tables, planes, curve = _parts(rng, plane_len=67_000)
    container = mux(jpeg, _header(), tables, planes, curve)
    segs = _app11_segments(container)
    payload_len = len(build_payload(_header(), tables, planes, curve))
    assert payload_len > 200_000
    assert len(segs) >= 4
    for seq, seg in enumerate(segs):
        assert seg[4:8] == CHUNK_TAG
        assert struct.unpack(">H", seg[8:10])[0] == seq
        if seq < len(segs) - 1:
            assert len(seg) - 10 == MAX_CHUNK
    # demux still inverts
    assert demux(container)[3] == planes


def test_chunks_inserted_after_app0(rng):
    container = mux(_jpeg(rng), _header(), *_parts(rng))
    # SOI (2) + APP0 (2 + 16) = offset 20 is the first APP11 marker
    assert container[20:22] == b"\xff\xeb"


def test_strip_extension_removes_all_app11(rng):
    jpeg = _jpeg(rng)
    container = mux(jpeg, _header(), *_parts(rng))
    stripped = strip_extension(container)
    assert stripped == jpeg
    seq = markers.walk_markers(stripped)
    assert seq == ["SOI", "APP0", "DQT", "SOF0", "DHT", "SOS", "EOI"]
    assert "APP11" not in seq


def test_stripped_and_container_decode_identically(rng):
    jpeg = _jpeg(rng, 24, 16, q=40)
    container = mux(jpeg, _header(24, 16), *_parts(rng))
    a = jpeg_decode(container)  # legacy mode: APP11 skipped
    b = jpeg_decode(strip_extension(container))
    c = jpeg_decode(jpeg)
    assert np.array_equal(a.planes, b.planes)
    assert np.array_equal(b.planes, c.planes)


def test_mux_rejects_jpeg_with_existing_app11(rng):
    container = mux(_jpeg(rng), _header(), *_parts(rng))
    with pytest.raises(ContainerFormatError):
        mux(container, _header(), *_parts(rng))


def test_checksum_detects_corruption(rng):
    container = bytearray(mux(_jpeg(rng), _header(), *_parts(rng)))
    segs = _app11_segments(bytes(container))
    start = bytes(container).index(segs[0])
    container[start + 30] ^= 0x40  # flip a payload bit
    with pytest.raises(ChecksumError):
        demux(bytes(container))


def test_missing_and_duplicate_chunks(rng):
    tables, planes, curve = _parts(rng, plane_len=66_000)
    container = mux(_jpeg(rng), _header(), tables, planes, curve)
    segs = _app11_segments(container)
    start = container.index(segs[1])
    removed = container[:start] + container[start + len(segs[1]) :]
    with pytest.raises(ContainerFormatError):
        demux(removed)
    duplicated = container[:start] + segs[1] + container[start:]
    with pytest.raises(ContainerFormatError):
        demux(duplicated)


def test_no_extension_chunks(rng):
    with pytest.raises(ContainerFormatError):
        demux(_jpeg(rng))


def _mutate_payload(container: bytes, offset: int, value: int) -> bytes:
    """Rewrite one payload byte and fix the checksum (single-chunk only)."""
    segs = _app11_segments(container)
    assert len(segs) == 1
    start = container.index(segs[0])
    payload = bytearray(segs[0][10:])
    payload[offset] = value
    payload[-4:] = struct.pack("<I", zlib.crc32(bytes(payload[:-4])) & 0xFFFFFFFF)
    rebuilt = segs[0][:10] + bytes(payload)
    return container[:start] + rebuilt + container[start + len(segs[0]) :]


def test_unknown_version_and_ids_are_classified(rng):
    container = mux(_jpeg(rng), _header(), *_parts(rng))
    with pytest.raises(UnsupportedError):
        demux(_mutate_payload(container, 4, 99))  # version
    with pytest.raises(UnsupportedError):
        demux(_mutate_payload(container, 5, 7))  # pixel type
    with pytest.raises(UnsupportedError):
        demux(_mutate_payload(container, 9, 9))  # transform id
    with pytest.raises(UnsupportedError):
        demux(_mutate_payload(container, 10, 17))  # backend id
    with pytest.raises(ContainerFormatError):
        demux(_mutate_payload(container, 7, 200))  # bit depth


def test_truncation_always_classified(rng):
    container = mux(_jpeg(rng, 8, 8), _header(), *_parts(rng, 8, 30))
    for cut in range(len(container)):
        try:
            demux(container[:cut])
        except CodecError:
            pass  # classified: fine
        # anything else propagates and fails the test


def test_chunk_capacity_limit(rng, monkeypatch):
    import hdrpack.container as container_mod

    monkeypatch.setattr(container_mod, "MAX_CHUNK", 50)
    header = _header()
    jpeg = _jpeg(rng)
    big = bytes(50 * 65536)  # one byte over capacity once headers are added
    with pytest.raises(ContainerFormatError):
        container_mod.mux(jpeg, header, [big, b"", b""], [b"", b"", b""], bytes(512))
