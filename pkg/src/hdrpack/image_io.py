"""HDR image ingestion and emission.

Images are three planar rasters of 16-bit value codes. Floating-point
images are carried as the raw bit patterns of half-precision samples,
reinterpreted as unsigned integers; that reinterpretation is a bijection,
so the integer pipeline downstream never needs float semantics. Integer
images keep their native codes and a bit depth.

Supported interchange formats:

* ``pfm``  - binary Portable FloatMap, RGB (``PF``) or grayscale (``Pf``),
  bottom-to-top scanlines, scale sign giving endianness. Samples are
  narrowed to half precision (round to nearest even) before
  reinterpretation; this is the only lossy step and happens at ingestion.
* ``ppm`` / ``pgm`` - binary Netpbm, 16-bit big-endian samples (8-bit
  accepted on read), maxval = 2^bit_depth - 1.
* ``raw``  - headerless planar little-endian 16-bit samples, R then G then
  B plane; dimensions and pixel type supplied by the caller. The only
  format that carries NaN payloads bit-exactly without an override.

Grayscale inputs are replicated to three planes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageFormatError, NanPolicyError

FORMATS = ("pfm", "ppm", "pgm", "raw")


class PixelType(enum.IntEnum):
    """How the 16-bit codes in an :class:`HdrImage` are to be interpreted."""

    HALF_FLOAT = 0
    INTEGER = 1


@dataclass(frozen=True)
class HdrImage:
    """Planar three-component raster of 16-bit value codes.

    ``planes`` has shape (3, height, width), dtype uint16. Half-float
    images always have bit_depth 16; integer images keep every sample
    below 2^bit_depth.
    """

    width: int
    height: int
    planes: np.ndarray
    pixel_type: PixelType
    bit_depth: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.planes.shape != (3, self.height, self.width):
            raise ValueError(
                f"plane shape {self.planes.shape} does not match "
                f"3x{self.height}x{self.width}"
            )
        if self.planes.dtype != np.uint16:
            raise ValueError("planes must be uint16")
        if self.pixel_type == PixelType.HALF_FLOAT:
            if self.bit_depth != 16:
                raise ValueError("half-float images have bit_depth 16")
        else:
            if not 1 <= self.bit_depth <= 16:
                raise ValueError("bit_depth must be in 1..16")
            if self.bit_depth < 16 and int(self.planes.max()) >= 1 << self.bit_depth:
                raise ValueError("sample exceeds declared bit depth")
        self.planes.setflags(write=False)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class LdrImage:
    """Planar three-component 8-bit raster (the tone-mapped base image)."""

    width: int
    height: int
    planes: np.ndarray

    def __post_init__(self):
        if self.planes.shape != (3, self.height, self.width):
            raise ValueError("plane shape mismatch")
        if self.planes.dtype != np.uint8:
            raise ValueError("planes must be uint8")
        self.planes.setflags(write=False)


# ---------------------------------------------------------------------------
# Half-precision reinterpretation


def half_to_code(h):
    """Reinterpret half-precision bit pattern(s) as unsigned 16-bit code(s).

    Total and exactly invertible over all 65536 patterns, NaNs included.
    """
    return np.asarray(h, dtype=np.float16).view(np.uint16)


def code_to_half(code):
    """Inverse of :func:`half_to_code`."""
    return np.asarray(code, dtype=np.uint16).view(np.float16)


def _codes_to_f32_bits(codes: np.ndarray) -> np.ndarray:
    """Widen half codes to float32 bit patterns with exact NaN payloads.

    Finite and infinite values use IEEE widening (exact); NaN payloads are
    shifted into the top mantissa bits so a later narrowing recovers them.
    """
    codes = codes.astype(np.uint32)
    sign = (codes >> 15) << 31
    exp = (codes >> 10) & 0x1F
    man = codes & 0x3FF
    is_nan = (exp == 0x1F) & (man != 0)
    widened = code_to_half(codes.astype(np.uint16)).astype(np.float32).view(np.uint32)
    nan_bits = sign | np.uint32(0x7F800000) | (man << 13)
    return np.where(is_nan, nan_bits, widened)


def _f32_bits_to_codes(bits: np.ndarray, allow_nan: bool) -> np.ndarray:
    """Narrow float32 bit patterns to half codes (round to nearest even).

    NaNs are rejected unless ``allow_nan``; allowed NaNs keep the top ten
    payload bits (quiet bit forced if the payload would vanish).
    """
    bits = bits.astype(np.uint32)
    exp = (bits >> 23) & 0xFF
    man = bits & 0x7FFFFF
    is_nan = (exp == 0xFF) & (man != 0)
    if is_nan.any():
        if not allow_nan:
            raise NanPolicyError(
                "input contains NaN samples (pass allow_nan to ingest them)"
            )
        sign16 = ((bits >> 31) << 15).astype(np.uint32)
        payload = man >> 13
        payload = np.where(payload == 0, np.uint32(0x200), payload)
        nan_codes = sign16 | np.uint32(0x7C00) | payload
        finite = np.where(is_nan, np.uint32(0), bits)
        with np.errstate(over="ignore"):  # overflow to inf is the defined rounding
            codes = half_to_code(
                finite.view(np.float32).astype(np.float16)
            ).astype(np.uint32)
        return np.where(is_nan, nan_codes, codes).astype(np.uint16)
    with np.errstate(over="ignore"):
        return half_to_code(bits.view(np.float32).astype(np.float16))


# ---------------------------------------------------------------------------
# Readers


def read_image(
    path,
    format: str | None = None,
    *,
    width: int | None = None,
    height: int | None = None,
    pixel_type: PixelType = PixelType.HALF_FLOAT,
    bit_depth: int = 16,
    allow_nan: bool = False,
) -> HdrImage:
    """Read an image file into an :class:`HdrImage`.

    ``format`` defaults to the file extension. ``raw`` needs explicit
    ``width``/``height`` plus ``pixel_type`` and, for integers,
    ``bit_depth``.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    data = path.read_bytes()
    return parse_image(
        data,
        fmt,
        width=width,
        height=height,
        pixel_type=pixel_type,
        bit_depth=bit_depth,
        allow_nan=allow_nan,
    )


def parse_image(
    data: bytes,
    fmt: str,
    *,
    width: int | None = None,
    height: int | None = None,
    pixel_type: PixelType = PixelType.HALF_FLOAT,
    bit_depth: int = 16,
    allow_nan: bool = False,
) -> HdrImage:
    """Parse in-memory image bytes (same contract as :func:`read_image`)."""
    if fmt not in FORMATS:
        raise ImageFormatError(f"unknown image format {fmt!r}")
    if fmt == "pfm":
        return _parse_pfm(data, allow_nan)
    if fmt in ("ppm", "pgm"):
        return _parse_netpbm(data)
    if width is None or height is None:
        raise ImageFormatError("raw format needs explicit width and height")
    return _parse_raw(data, width, height, pixel_type, bit_depth)


def _parse_header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    # Netpbm/PFM style: whitespace-separated tokens, '#' comments allowed.
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated header")
        tokens.append(data[start:pos])
    # Exactly one whitespace byte separates the header from the raster.
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ImageFormatError("missing header terminator")
    return tokens, pos + 1


def _parse_pfm(data: bytes, allow_nan: bool) -> HdrImage:
    if data[:2] not in (b"PF", b"Pf"):
        raise ImageFormatError("not a PFM file")
    color = data[:2] == b"PF"
    tokens, pos = _parse_header_tokens(data, 4)
    try:
        w, h = int(tokens[1]), int(tokens[2])
        scale = float(tokens[3])
    except ValueError as exc:
        raise ImageFormatError("bad PFM header") from exc
    if w < 1 or h < 1 or scale == 0.0:
        raise ImageFormatError("bad PFM header values")
    nchan = 3 if color else 1
    expected = w * h * nchan * 4
    if len(data) - pos < expected:
        raise ImageFormatError("PFM sample data truncated")
    endian = "<" if scale < 0 else ">"
    # Read raw float32 bit patterns as integers so byte order never touches
    # the payload, then flip the bottom-to-top scanline order.
    bits = np.frombuffer(data, dtype=endian + "u4", count=w * h * nchan, offset=pos)
    bits = bits.astype(np.uint32).reshape(h, w, nchan)[::-1]
    codes = _f32_bits_to_codes(np.ascontiguousarray(bits), allow_nan)
    if color:
        planes = np.ascontiguousarray(codes.transpose(2, 0, 1))
    else:
        planes = np.repeat(codes.reshape(1, h, w), 3, axis=0)
    return HdrImage(w, h, np.ascontiguousarray(planes), PixelType.HALF_FLOAT, 16)


def _parse_netpbm(data: bytes) -> HdrImage:
    if data[:2] not in (b"P5", b"P6"):
        raise ImageFormatError("not a binary PGM/PPM file")
    color = data[:2] == b"P6"
    tokens, pos = _parse_header_tokens(data, 4)
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ImageFormatError("bad PGM/PPM header") from exc
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise ImageFormatError("bad PGM/PPM header values")
    nchan = 3 if color else 1
    wide = maxval > 255
    expected = w * h * nchan * (2 if wide else 1)
    if len(data) - pos < expected:
        raise ImageFormatError("PGM/PPM sample data truncated")
    dtype = ">u2" if wide else "u1"
    raster = np.frombuffer(data, dtype=dtype, count=w * h * nchan, offset=pos)
    samples = raster.astype(np.uint16).reshape(h, w, nchan)
    if int(samples.max()) > maxval:
        raise ImageFormatError("sample exceeds maxval")
    if color:
        planes = np.ascontiguousarray(samples.transpose(2, 0, 1))
    else:
        planes = np.repeat(samples.reshape(1, h, w), 3, axis=0)
    return HdrImage(
        w, h, np.ascontiguousarray(planes), PixelType.INTEGER, maxval.bit_length()
    )


def _parse_raw(data, width, height, pixel_type, bit_depth) -> HdrImage:
    expected = width * height * 3 * 2
    if len(data) != expected:
        raise ImageFormatError(
            f"raw file is {len(data)} bytes, expected {expected} "
            f"for {width}x{height}x3 16-bit planar"
        )
    planes = (
        np.frombuffer(data, dtype="<u2").reshape(3, height, width).copy()
    )
    pixel_type = PixelType(pixel_type)
    if pixel_type == PixelType.HALF_FLOAT:
        bit_depth = 16
    return HdrImage(width, height, planes, pixel_type, bit_depth)


# ---------------------------------------------------------------------------
# Writers


def write_image(img: HdrImage, path, format: str | None = None) -> None:
    """Write ``img`` so that :func:`read_image` reproduces it bit-exactly.

    ``pfm`` requires a half-float image, ``ppm``/``pgm`` an integer one
    (``pgm`` additionally requires the three planes to be identical);
    ``raw`` accepts anything.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise ImageFormatError(f"unknown image format {fmt!r}")
    path.write_bytes(image_bytes(img, fmt))


def image_bytes(img: HdrImage, fmt: str) -> bytes:
    """Serialize ``img`` in ``fmt`` (same rules as :func:`write_image`)."""
    if fmt == "pfm":
        if img.pixel_type != PixelType.HALF_FLOAT:
            raise ImageFormatError("PFM output requires a half-float image")
        bits = _codes_to_f32_bits(img.planes)  # (3, h, w) uint32
        raster = np.ascontiguousarray(bits.transpose(1, 2, 0)[::-1]).astype("<u4")
        header = f"PF\n{img.width} {img.height}\n-1.0\n".encode("ascii")
        return header + raster.tobytes()
    if fmt in ("ppm", "pgm"):
        if img.pixel_type != PixelType.INTEGER:
            raise ImageFormatError("PPM/PGM output requires an integer image")
        maxval = (1 << img.bit_depth) - 1
        if fmt == "pgm":
            if not (
                np.array_equal(img.planes[0], img.planes[1])
                and np.array_equal(img.planes[0], img.planes[2])
            ):
                raise ImageFormatError("PGM output requires identical planes")
            samples = img.planes[0]
            magic = "P5"
        else:
            samples = img.planes.transpose(1, 2, 0)
            magic = "P6"
        header = f"{magic}\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
        dtype = ">u2" if maxval > 255 else "u1"
        return header + np.ascontiguousarray(samples).astype(dtype).tobytes()
    if fmt == "raw":
        return np.ascontiguousarray(img.planes).astype("<u2").tobytes()
    raise ImageFormatError(f"unknown image format {fmt!r}")


def images_equal(a: HdrImage, b: HdrImage) -> bool:
    """Bit-exact equality of geometry, type and every sample."""
    return (
        a.width == b.width
        and a.height == b.height
        and a.pixel_type == b.pixel_type
        and a.bit_depth == b.bit_depth
        and np.array_equal(a.planes, b.planes)
    )


def first_difference(a: HdrImage, b: HdrImage):
    """Locate the first differing sample, or None.

    Returns (component, x, y, expected, actual) scanning planes in order,
    row-major. Geometry mismatches report component -1 at the origin.
    """
    if (a.width, a.height) != (b.width, b.height):
        return (-1, 0, 0, a.width * a.height, b.width * b.height)
    for c in range(3):
        if np.array_equal(a.planes[c], b.planes[c]):
            continue
        diff = np.nonzero(a.planes[c] != b.planes[c])
        y, x = int(diff[0][0]), int(diff[1][0])
        return (c, x, y, int(a.planes[c][y, x]), int(b.planes[c][y, x]))
    return None
