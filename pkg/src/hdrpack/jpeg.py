"""Deterministic baseline JPEG codec (encoder and decoder).

The codec is bundled rather than borrowed because the residual scheme
subtracts the *decoder's* reconstruction from the original image: encoder
and decoder must agree bit for bit on every platform, which rules out
floating-point DCTs and external libraries. All stages are integer
arithmetic with pinned rounding:

* forward/inverse 8x8 DCT via a 14-bit fixed-point cosine matrix,
  products accumulated in int64 and rounded with ``(v + 2^27) >> 28``;
* quantization rounds half away from zero; quantized DC is clamped to
  [-1024, 1023] and AC to [-1023, 1023] so every symbol fits the
  baseline Huffman alphabet;
* the decoder clamps dequantized coefficients to +/-2^20 (never reached
  by conforming streams) so corrupt input cannot overflow the IDCT.

Output streams are baseline sequential, 8-bit, YCbCr 4:4:4 with the
conventional quantization tables scaled by a 0..100 quality factor and
the conventional Huffman tables, wrapped SOI / APP0(JFIF) / DQT / SOF0 /
DHT / SOS ... EOI. The decoder accepts this subset (plus skipped APPn/COM
segments) and rejects everything else with a classified error; unknown
application segments never affect pixels, which is what makes containers
with extension payloads legacy-decodable.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from . import _jpeg_entropy as _ent
from .errors import JpegFormatError
from .image_io import LdrImage

# ---------------------------------------------------------------------------
# Static tables

# Conventional base quantization tables (natural order).
BASE_QUANT_LUMA = np.array(
    [
        16, 11, 10, 16, 24, 40, 51, 61,
        12, 12, 14, 19, 26, 58, 60, 55,
        14, 13, 16, 24, 40, 57, 69, 56,
        14, 17, 22, 29, 51, 87, 80, 62,
        18, 22, 37, 56, 68, 109, 103, 77,
        24, 35, 55, 64, 81, 104, 113, 92,
        49, 64, 78, 87, 103, 121, 120, 101,
        72, 92, 95, 98, 112, 100, 103, 99,
    ],
    dtype=np.int64,
)
BASE_QUANT_CHROMA = np.array(
    [
        17, 18, 24, 47, 99, 99, 99, 99,
        18, 21, 26, 66, 99, 99, 99, 99,
        24, 26, 56, 99, 99, 99, 99, 99,
        47, 66, 99, 99, 99, 99, 99, 99,
        99, 99, 99, 99, 99, 99, 99, 99,
        99, 99, 99, 99, 99, 99, 99, 99,
        99, 99, 99, 99, 99, 99, 99, 99,
        99, 99, 99, 99, 99, 99, 99, 99,
    ],
    dtype=np.int64,
)

# Conventional Huffman tables: (BITS[1..16], HUFFVAL).
DC_LUMA_BITS = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
DC_LUMA_VALS = list(range(12))
DC_CHROMA_BITS = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
DC_CHROMA_VALS = list(range(12))
AC_LUMA_BITS = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D]
AC_LUMA_VALS = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12,
    0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16,
    0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39,
    0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79,
    0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98,
    0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4,
    0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA,
    0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]
AC_CHROMA_BITS = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77]
AC_CHROMA_VALS = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21,
    0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0,
    0x15, 0x62, 0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34,
    0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26,
    0x27, 0x28, 0x29, 0x2A, 0x35, 0x36, 0x37, 0x38,
    0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78,
    0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96,
    0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5,
    0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4,
    0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3,
    0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2,
    0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA,
    0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9,
    0xEA, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
]


def _zigzag_order() -> np.ndarray:
    """Natural index of the k-th coefficient in zigzag scan order."""
    order = []
    for d in range(15):
        rs = range(max(0, d - 7), min(7, d) + 1)
        for r in rs if d % 2 else reversed(rs):
            order.append(r * 8 + (d - r))
    return np.array(order, dtype=np.int64)


ZIGZAG = _zigzag_order()


def _dct_matrix() -> np.ndarray:
    # Orthonormal 8-point DCT-II scaled to 14-bit fixed point.
    m = np.empty((8, 8), dtype=np.float64)
    for u in range(8):
        s = math.sqrt(0.125) if u == 0 else 0.5
        for k in range(8):
            m[u, k] = s * math.cos((2 * k + 1) * u * math.pi / 16)
    return np.round(m * 16384).astype(np.int64)


DCT_M = _dct_matrix()
_DCT_SHIFT = 28  # two 14-bit factors
_COEF_CLAMP = 1 << 20
_MAX_PIXELS = 1 << 24  # decode allocation cap (~16.7M pixels)


def quality_tables(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Scale the base quantization tables by a 0..100 quality factor."""
    q = max(0, min(100, int(q)))
    qq = max(1, q)
    scale = 5000 // qq if qq < 50 else 200 - 2 * qq
    def scaled(base):
        return np.clip((base * scale + 50) // 100, 1, 255).astype(np.int64)
    return scaled(BASE_QUANT_LUMA), scaled(BASE_QUANT_CHROMA)


# ---------------------------------------------------------------------------
# Huffman table derivation


def _canonical_codes(bits, vals):
    sizes = []
    for ln, count in enumerate(bits, start=1):
        sizes.extend([ln] * count)
    if len(sizes) != len(vals):
        raise JpegFormatError("Huffman table BITS/HUFFVAL mismatch")
    codes = []
    code = 0
    prev = sizes[0] if sizes else 0
    for ln in sizes:
        while prev < ln:
            code <<= 1
            prev += 1
        if code >= 1 << ln:
            raise JpegFormatError("overfull Huffman table")
        codes.append(code)
        code += 1
    return sizes, codes


def encoder_tables(bits, vals):
    """Symbol-indexed (code, size) arrays for the scan encoder."""
    sizes, codes = _canonical_codes(bits, vals)
    enc_codes = np.zeros(256, dtype=np.int64)
    enc_sizes = np.zeros(256, dtype=np.int64)
    for v, c, s in zip(vals, codes, sizes):
        enc_codes[v] = c
        enc_sizes[v] = s
    return enc_codes, enc_sizes


def decoder_luts(bits, vals):
    """16-bit lookahead tables: symbol and code length per prefix."""
    sizes, codes = _canonical_codes(bits, vals)
    sym = np.zeros(65536, dtype=np.uint8)
    ln = np.zeros(65536, dtype=np.uint8)
    for v, c, s in zip(vals, codes, sizes):
        start = c << (16 - s)
        span = 1 << (16 - s)
        if start + span > 65536:
            raise JpegFormatError("overfull Huffman table")
        sym[start : start + span] = v
        ln[start : start + span] = s
    return sym, ln


def _std_encoder_tables():
    dc_codes = np.zeros((2, 256), dtype=np.int64)
    dc_sizes = np.zeros((2, 256), dtype=np.int64)
    ac_codes = np.zeros((2, 256), dtype=np.int64)
    ac_sizes = np.zeros((2, 256), dtype=np.int64)
    dc_codes[0], dc_sizes[0] = encoder_tables(DC_LUMA_BITS, DC_LUMA_VALS)
    dc_codes[1], dc_sizes[1] = encoder_tables(DC_CHROMA_BITS, DC_CHROMA_VALS)
    ac_codes[0], ac_sizes[0] = encoder_tables(AC_LUMA_BITS, AC_LUMA_VALS)
    ac_codes[1], ac_sizes[1] = encoder_tables(AC_CHROMA_BITS, AC_CHROMA_VALS)
    return dc_codes, dc_sizes, ac_codes, ac_sizes


_STD_ENC = _std_encoder_tables()


# ---------------------------------------------------------------------------
# Color conversion and block plumbing (all int32/int64, pinned rounding)


def rgb_to_ycbcr(planes: np.ndarray) -> np.ndarray:
    r, g, b = (planes[i].astype(np.int64) for i in range(3))
    y = (19595 * r + 38470 * g + 7471 * b + 32768) >> 16
    cb = ((-11059 * r - 21709 * g + 32768 * b + 32768) >> 16) + 128
    cr = ((32768 * r - 27439 * g - 5329 * b + 32768) >> 16) + 128
    out = np.stack([y, cb, cr])
    return np.clip(out, 0, 255).astype(np.uint8)


def ycbcr_to_rgb(planes: np.ndarray) -> np.ndarray:
    y = planes[0].astype(np.int64)
    cb = planes[1].astype(np.int64) - 128
    cr = planes[2].astype(np.int64) - 128
    r = y + ((91881 * cr + 32768) >> 16)
    g = y - ((22554 * cb + 46802 * cr + 32768) >> 16)
    b = y + ((116130 * cb + 32768) >> 16)
    out = np.stack([r, g, b])
    return np.clip(out, 0, 255).astype(np.uint8)


def _blockify(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % 8
    pw = (-w) % 8
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    hh, ww = plane.shape
    return (
        plane.reshape(hh // 8, 8, ww // 8, 8)
        .transpose(0, 2, 1, 3)
        .reshape(-1, 8, 8)
    )


def _unblockify(blocks: np.ndarray, width: int, height: int) -> np.ndarray:
    bw = (width + 7) // 8
    bh = (height + 7) // 8
    full = (
        blocks.reshape(bh, bw, 8, 8).transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8)
    )
    return full[:height, :width]


def _rshift_round(v: np.ndarray, shift: int) -> np.ndarray:
    return (v + (1 << (shift - 1))) >> shift


def fdct_blocks(blocks: np.ndarray) -> np.ndarray:
    """Fixed-point forward DCT of level-shifted int64 blocks (n, 8, 8)."""
    g = DCT_M @ blocks @ DCT_M.T
    return _rshift_round(g, _DCT_SHIFT)


def idct_blocks(coeffs: np.ndarray) -> np.ndarray:
    """Fixed-point inverse DCT; returns unshifted spatial values."""
    g = DCT_M.T @ coeffs @ DCT_M
    return _rshift_round(g, _DCT_SHIFT)


def _quantize(coeffs: np.ndarray, qtable: np.ndarray) -> np.ndarray:
    # Round half away from zero, then clamp into the baseline alphabet.
    flat = coeffs.reshape(-1, 64)
    mag = (np.abs(flat) + qtable // 2) // qtable
    out = np.sign(flat) * mag
    out[:, 0] = np.clip(out[:, 0], -1024, 1023)
    out[:, 1:] = np.clip(out[:, 1:], -1023, 1023)
    return out


# ---------------------------------------------------------------------------
# Encoder


def jpeg_encode(ldr: LdrImage, q: int) -> bytes:
    """Encode an 8-bit image as a baseline 4:4:4 JPEG at quality ``q``.

    Deterministic: identical input yields identical bytes.
    """
    qy, qc = quality_tables(q)
    ycc = rgb_to_ycbcr(ldr.planes)
    comp_blocks = []
    for c in range(3):
        blocks = _blockify(ycc[c]).astype(np.int64) - 128
        coeffs = fdct_blocks(blocks)
        quant = _quantize(coeffs, qy if c == 0 else qc)
        comp_blocks.append(quant[:, ZIGZAG])
    nmcu = comp_blocks[0].shape[0]
    zz = np.stack(comp_blocks, axis=1).reshape(3 * nmcu, 64).astype(np.int32)
    comp_of_block = np.tile(np.arange(3, dtype=np.uint8), nmcu)
    table_of_comp = np.array([0, 1, 1], dtype=np.uint8)

    out = np.empty(zz.shape[0] * 420 + 64, dtype=np.uint8)
    dc_codes, dc_sizes, ac_codes, ac_sizes = _STD_ENC
    n = _ent.encode_scan(
        zz, comp_of_block, table_of_comp, dc_codes, dc_sizes, ac_codes, ac_sizes, out
    )
    scan = out[:n].tobytes()

    head = bytearray(b"\xff\xd8")
    head += b"\xff\xe0" + struct.pack(">H", 16) + b"JFIF\x00\x01\x01\x00" + struct.pack(
        ">HHBB", 1, 1, 0, 0
    )
    dqt = bytearray()
    for tq, table in ((0, qy), (1, qc)):
        dqt += bytes([tq]) + bytes(int(v) for v in table[ZIGZAG])
    head += b"\xff\xdb" + struct.pack(">H", 2 + len(dqt)) + dqt
    sof = struct.pack(">BHHB", 8, ldr.height, ldr.width, 3)
    for cid, tq in ((1, 0), (2, 1), (3, 1)):
        sof += struct.pack("BBB", cid, 0x11, tq)
    head += b"\xff\xc0" + struct.pack(">H", 2 + len(sof)) + sof
    dht = bytearray()
    for tc_th, bits, vals in (
        (0x00, DC_LUMA_BITS, DC_LUMA_VALS),
        (0x10, AC_LUMA_BITS, AC_LUMA_VALS),
        (0x01, DC_CHROMA_BITS, DC_CHROMA_VALS),
        (0x11, AC_CHROMA_BITS, AC_CHROMA_VALS),
    ):
        dht += bytes([tc_th]) + bytes(bits) + bytes(vals)
    head += b"\xff\xc4" + struct.pack(">H", 2 + len(dht)) + dht
    sos = bytes([3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0])
    head += b"\xff\xda" + struct.pack(">H", 2 + len(sos)) + sos
    return bytes(head) + scan + b"\xff\xd9"


# ---------------------------------------------------------------------------
# Decoder


class _Frame:
    __slots__ = ("width", "height", "ncomp", "comp_tq", "comp_ids")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise JpegFormatError(message)


def jpeg_decode(data: bytes) -> LdrImage:
    """Decode a baseline JPEG produced by :func:`jpeg_encode`.

    Unknown APPn/COM segments are skipped, so a container with extension
    segments decodes exactly like its stripped base layer. Deterministic,
    integer-only; raises :class:`JpegFormatError` on anything outside the
    supported subset.
    """
    _require(len(data) >= 4 and data[0:2] == b"\xff\xd8", "missing SOI marker")
    pos = 2
    qtables: dict[int, np.ndarray] = {}
    dc_luts: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    ac_luts: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    frame = None
    n = len(data)

    while True:
        _require(pos + 2 <= n, "truncated stream (no EOI)")
        _require(data[pos] == 0xFF, "expected marker")
        while pos < n and data[pos] == 0xFF and pos + 1 < n and data[pos + 1] == 0xFF:
            pos += 1  # fill bytes
        _require(pos + 2 <= n, "truncated marker")
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD9:  # EOI
            raise JpegFormatError("EOI before scan data")
        if marker == 0x01 or 0xD0 <= marker <= 0xD7:
            continue  # standalone markers carry no segment
        _require(pos + 2 <= n, "truncated segment length")
        seglen = struct.unpack(">H", data[pos : pos + 2])[0]
        _require(seglen >= 2 and pos + seglen <= n, "bad segment length")
        body = data[pos + 2 : pos + seglen]
        pos += seglen

        if marker == 0xDB:  # DQT
            _parse_dqt(body, qtables)
        elif marker == 0xC4:  # DHT
            _parse_dht(body, dc_luts, ac_luts)
        elif marker == 0xC0:  # SOF0 baseline
            _require(frame is None, "multiple frames")
            frame = _parse_sof(body)
        elif marker in (0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF):
            raise JpegFormatError("only baseline sequential DCT is supported")
        elif marker == 0xDD:  # DRI
            _require(len(body) == 2, "bad DRI length")
            interval = struct.unpack(">H", body)[0]
            _require(interval == 0, "restart intervals are not supported")
        elif marker == 0xDA:  # SOS
            _require(frame is not None, "scan before frame header")
            td_ta = _parse_sos(body, frame)
            return _decode_scan_pixels(
                data, pos, frame, qtables, dc_luts, ac_luts, td_ta
            )
        elif 0xE0 <= marker <= 0xEF or marker == 0xFE:
            continue  # APPn / COM: skipped, never affects pixels
        else:
            raise JpegFormatError(f"unsupported marker 0xFF{marker:02X}")


def _parse_dqt(body: bytes, qtables) -> None:
    pos = 0
    while pos < len(body):
        pq = body[pos] >> 4
        tq = body[pos] & 0x0F
        _require(pq == 0, "16-bit quantization tables are not supported")
        _require(tq < 4, "bad quantization table id")
        _require(pos + 65 <= len(body), "truncated DQT")
        table = np.frombuffer(body, dtype=np.uint8, count=64, offset=pos + 1)
        natural = np.zeros(64, dtype=np.int64)
        natural[ZIGZAG] = table
        _require(int(natural.min()) >= 1, "zero entry in quantization table")
        qtables[tq] = natural
        pos += 65
    _require(pos == len(body), "trailing bytes in DQT")


def _parse_dht(body: bytes, dc_luts, ac_luts) -> None:
    pos = 0
    while pos < len(body):
        tc = body[pos] >> 4
        th = body[pos] & 0x0F
        _require(tc in (0, 1) and th < 4, "bad Huffman table class/id")
        _require(pos + 17 <= len(body), "truncated DHT")
        bits = list(body[pos + 1 : pos + 17])
        nvals = sum(bits)
        _require(nvals <= 256 and pos + 17 + nvals <= len(body), "truncated DHT")
        vals = list(body[pos + 17 : pos + 17 + nvals])
        luts = decoder_luts(bits, vals)
        (dc_luts if tc == 0 else ac_luts)[th] = luts
        pos += 17 + nvals
    _require(pos == len(body), "trailing bytes in DHT")


def _parse_sof(body: bytes):
    _require(len(body) >= 6, "truncated SOF")
    precision, height, width, ncomp = struct.unpack(">BHHB", body[:6])
    _require(precision == 8, "only 8-bit precision is supported")
    _require(width >= 1 and height >= 1, "bad frame dimensions")
    _require(width * height <= _MAX_PIXELS, "frame exceeds pixel limit")
    _require(ncomp == 3, "only three-component images are supported")
    _require(len(body) == 6 + 3 * ncomp, "bad SOF length")
    frame = _Frame()
    frame.width = width
    frame.height = height
    frame.ncomp = ncomp
    frame.comp_ids = []
    frame.comp_tq = []
    for i in range(ncomp):
        cid, hv, tq = body[6 + 3 * i : 9 + 3 * i]
        _require(hv == 0x11, "only 4:4:4 sampling is supported")
        _require(tq < 4, "bad quantization table selector")
        frame.comp_ids.append(cid)
        frame.comp_tq.append(tq)
    _require(len(set(frame.comp_ids)) == ncomp, "duplicate component ids")
    return frame


def _parse_sos(body: bytes, frame) -> list[tuple[int, int]]:
    _require(len(body) >= 1, "truncated SOS")
    ns = body[0]
    _require(ns == frame.ncomp, "scan must cover all components")
    _require(len(body) == 1 + 2 * ns + 3, "bad SOS length")
    td_ta = [None] * frame.ncomp
    for j in range(ns):
        cs = body[1 + 2 * j]
        tt = body[2 + 2 * j]
        _require(cs in frame.comp_ids, "scan component not in frame")
        idx = frame.comp_ids.index(cs)
        _require(td_ta[idx] is None, "duplicate scan component")
        td_ta[idx] = (tt >> 4, tt & 0x0F)
    ss, se, a = body[1 + 2 * ns : 4 + 2 * ns]
    _require(ss == 0 and se == 63 and a == 0, "not a sequential full scan")
    return td_ta


def _decode_scan_pixels(data, pos, frame, qtables, dc_luts, ac_luts, td_ta):
    for c in range(frame.ncomp):
        _require(frame.comp_tq[c] in qtables, "missing quantization table")
        td, ta = td_ta[c]
        _require(td in dc_luts, "missing DC Huffman table")
        _require(ta in ac_luts, "missing AC Huffman table")

    bw = (frame.width + 7) // 8
    bh = (frame.height + 7) // 8
    nmcu = bw * bh
    nblocks = nmcu * 3

    # Scans reference at most two distinct table pairs here; collapse the
    # id space to the kernel's [2, 65536] layout.
    pair_ids = []
    table_of_comp = np.zeros(3, dtype=np.uint8)
    for c in range(3):
        pair = td_ta[c]
        if pair not in pair_ids:
            pair_ids.append(pair)
        table_of_comp[c] = pair_ids.index(pair)
    _require(len(pair_ids) <= 2, "more than two Huffman table pairs per scan")
    dc_sym = np.zeros((2, 65536), dtype=np.uint8)
    dc_len = np.zeros((2, 65536), dtype=np.uint8)
    ac_sym = np.zeros((2, 65536), dtype=np.uint8)
    ac_len = np.zeros((2, 65536), dtype=np.uint8)
    for slot, (td, ta) in enumerate(pair_ids):
        dc_sym[slot], dc_len[slot] = dc_luts[td]
        ac_sym[slot], ac_len[slot] = ac_luts[ta]

    comp_of_block = np.tile(np.arange(3, dtype=np.uint8), nmcu)
    blocks = np.zeros((nblocks, 64), dtype=np.int32)
    scan_bytes = np.frombuffer(data, dtype=np.uint8, offset=pos)
    status, used = _ent.decode_scan(
        scan_bytes, blocks, comp_of_block, table_of_comp,
        dc_sym, dc_len, ac_sym, ac_len,
    )
    if status == _ent.ERR_TRUNCATED:
        raise JpegFormatError("entropy data truncated")
    if status == _ent.ERR_BAD_CODE:
        raise JpegFormatError("invalid Huffman code in entropy data")
    if status == _ent.ERR_RUN_OVERFLOW:
        raise JpegFormatError("coefficient run overflows block")

    end = pos + used
    while end + 1 < len(data) and data[end] == 0xFF and data[end + 1] == 0xFF:
        end += 1
    _require(
        end + 2 <= len(data) and data[end] == 0xFF and data[end + 1] == 0xD9,
        "expected EOI after scan",
    )

    zz = blocks.reshape(nmcu, 3, 64).astype(np.int64)
    planes = np.empty((3, frame.height, frame.width), dtype=np.uint8)
    for c in range(3):
        natural = np.zeros((nmcu, 64), dtype=np.int64)
        natural[:, ZIGZAG] = zz[:, c, :]
        coeffs = natural * qtables[frame.comp_tq[c]]
        np.clip(coeffs, -_COEF_CLAMP, _COEF_CLAMP, out=coeffs)
        spatial = idct_blocks(coeffs.reshape(nmcu, 8, 8)) + 128
        samples = np.clip(spatial, 0, 255).astype(np.uint8)
        planes[c] = _unblockify(samples, frame.width, frame.height)
    return LdrImage(frame.width, frame.height, ycbcr_to_rgb(planes))
