"""Bundled baseline JPEG codec: determinism, structure, oracle equality."""

import numpy as np
import pytest

from hdrpack import JpegFormatError, LdrImage, jpeg_decode, jpeg_encode
from hdrpack.jpeg import (
    AC_CHROMA_BITS,
    AC_CHROMA_VALS,
    AC_LUMA_BITS,
    AC_LUMA_VALS,
    BASE_QUANT_CHROMA,
    BASE_QUANT_LUMA,
    DC_CHROMA_BITS,
    DC_CHROMA_VALS,
    DC_LUMA_BITS,
    DC_LUMA_VALS,
    ZIGZAG,
    _blockify,
    _quantize,
    fdct_blocks,
    quality_tables,
)

import markers
import reference_jpeg


def _random_ldr(rng, w, h):
    return LdrImage(w, h, rng.integers(0, 256, (3, h, w)).astype(np.uint8))


def _smooth_ldr(rng, w, h):
    ramp = np.linspace(0, 255, w)[None, :] * np.ones((h, 1))
    planes = np.stack(
        [np.clip(ramp + rng.normal(0, 6, (h, w)), 0, 255) for _ in range(3)]
    )
    return LdrImage(w, h, planes.astype(np.uint8))


# ---------------------------------------------------------------------------
# Static table sanity


def test_huffman_tables_structurally_valid():
    for bits, vals in [
        (DC_LUMA_BITS, DC_LUMA_VALS),
        (DC_CHROMA_BITS, DC_CHROMA_VALS),
        (AC_LUMA_BITS, AC_LUMA_VALS),
        (AC_CHROMA_BITS, AC_CHROMA_VALS),
    ]:
        assert sum(bits) == len(vals)
        assert len(set(vals)) == len(vals)
        kraft = sum(count / (1 << (i + 1)) for i, count in enumerate(bits))
        assert kraft <= 1.0


def test_huffman_tables_cover_needed_symbols():
    assert set(DC_LUMA_VALS) == set(range(12))
    assert set(DC_CHROMA_VALS) == set(range(12))
    needed = {(run << 4) | size for run in range(16) for size in range(1, 11)}
    needed |= {0x00, 0xF0}
    assert set(AC_LUMA_VALS) == needed
    assert set(AC_CHROMA_VALS) == needed


def test_zigzag_order_matches_literal():
    assert list(ZIGZAG) == reference_jpeg.ZIGZAG_LITERAL


def test_quality_scaling():
    qy50, qc50 = quality_tables(50)
    assert np.array_equal(qy50, BASE_QUANT_LUMA)
    assert np.array_equal(qc50, BASE_QUANT_CHROMA)
    qy100, _ = quality_tables(100)
    assert (qy100 == 1).all()
    qy0, _ = quality_tables(0)
    qy1, _ = quality_tables(1)
    assert np.array_equal(qy0, qy1)  # q=0 behaves as q=1
    assert qy1.max() == 255 and qy1.min() >= 1


# ---------------------------------------------------------------------------
# Encoder output structure


def test_marker_framing(rng):
    data = jpeg_encode(_random_ldr(rng, 13, 9), 80)
    assert data[:2] == b"\xff\xd8" and data[-2:] == b"\xff\xd9"
    assert markers.walk_markers(data) == [
        "SOI", "APP0", "DQT", "SOF0", "DHT", "SOS", "EOI",
    ]


def test_flat_gray_block_is_dc_only():
    planes = np.full((3, 8, 8), 128, dtype=np.uint8)
    blocks = _blockify(planes[0]).astype(np.int64) - 128
    quant = _quantize(fdct_blocks(blocks), quality_tables(90)[0])
    assert quant.shape == (1, 64)
    assert (quant == 0).all()  # flat gray: zero DC diff and zero AC


def test_flat_image_roundtrips_exactly():
    img = LdrImage(16, 16, np.full((3, 16, 16), 128, dtype=np.uint8))
    out = jpeg_decode(jpeg_encode(img, 90))
    assert np.array_equal(out.planes, img.planes)


def test_encode_decode_deterministic(rng):
    img = _random_ldr(rng, 21, 17)
    a = jpeg_encode(img, 75)
    b = jpeg_encode(img, 75)
    assert a == b
    d1 = jpeg_decode(a)
    d2 = jpeg_decode(a)
    assert np.array_equal(d1.planes, d2.planes)


def test_higher_quality_is_larger(rng):
    img = _smooth_ldr(rng, 64, 48)
    lo = jpeg_encode(img, 1)
    hi = jpeg_encode(img, 100)
    assert len(hi) > len(lo)
    jpeg_decode(lo)
    jpeg_decode(hi)


@pytest.mark.parametrize("q", [0, 25, 50, 80, 100])
@pytest.mark.parametrize("size", [(1, 1), (8, 8), (17, 13), (32, 9)])
def test_decode_matches_scalar_reference(rng, q, size):
    w, h = size
    img = _random_ldr(rng, w, h)
    data = jpeg_encode(img, q)
    fast = jpeg_decode(data)
    rw, rh, ref = reference_jpeg.decode(data)
    assert (rw, rh) == (w, h)
    assert np.array_equal(fast.planes, np.array(ref, dtype=np.uint8))


def test_app_segments_are_ignored(rng):
    img = _random_ldr(rng, 10, 10)
    data = jpeg_encode(img, 60)
    # splice an APP11 segment right after APP0 (offset 2 + 2 + 16)
    app11 = b"\xff\xeb\x00\x0acomment!"
    spliced = data[:20] + app11 + data[20:]
    out = jpeg_decode(spliced)
    assert np.array_equal(out.planes, jpeg_decode(data).planes)


# ---------------------------------------------------------------------------
# Error handling


def test_decode_error_paths(rng):
    img = _random_ldr(rng, 12, 12)
    data = jpeg_encode(img, 50)
    with pytest.raises(JpegFormatError):
        jpeg_decode(b"\x00\x01\x02")
    with pytest.raises(JpegFormatError):
        jpeg_decode(data[:40])  # truncated header section
    with pytest.raises(JpegFormatError):
        jpeg_decode(data[:-30])  # truncated entropy data
    progressive = bytearray(data)
    sof = data.index(b"\xff\xc0")
    progressive[sof + 1] = 0xC2
    with pytest.raises(JpegFormatError):
        jpeg_decode(bytes(progressive))
    with pytest.raises(JpegFormatError):
        jpeg_decode(data[:2] + b"\xff\x13" + data[2:])  # reserved marker


def test_decode_rejects_oversize_frame():
    # hand-built SOF claiming a huge frame must fail before allocation
    sof = b"\xff\xc0\x00\x11\x08\xff\xff\xff\xff\x03\x01\x11\x00\x02\x11\x01\x03\x11\x01"
    data = b"\xff\xd8" + sof + b"\xff\xd9"
    with pytest.raises(JpegFormatError):
        jpeg_decode(data)
