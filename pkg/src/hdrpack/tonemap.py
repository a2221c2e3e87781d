"""Global tone mapping between the 16-bit code domain and 8-bit levels.

The curve only has to be monotone and deterministic: the extension layer
corrects every bit of base-layer error, so losslessness holds for any
curve. The forward lookup is total on all 65536 codes; the inverse is a
256-entry lookup giving a representative code per level (midpoint of the
level's preimage) and travels inside the container, so decoding never
recomputes it.

Defaults: integer images get a linear scale over their bit depth;
half-float images get a log-domain percentile stretch over the positive
code subrange (negative, infinite and NaN codes saturate at level 255).
Constant images map their single code to mid-gray.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContainerFormatError
from .image_io import HdrImage, LdrImage, PixelType, code_to_half

CURVE_BYTES = 512  # 256 inverse entries, little-endian uint16


@dataclass(frozen=True)
class ToneMapCurve:
    """Monotone non-decreasing code->level lookup plus its inverse."""

    forward: np.ndarray  # uint8[65536]
    inverse: np.ndarray  # uint16[256]

    def __post_init__(self):
        if self.forward.shape != (65536,) or self.forward.dtype != np.uint8:
            raise ValueError("forward must be uint8[65536]")
        if self.inverse.shape != (256,) or self.inverse.dtype != np.uint16:
            raise ValueError("inverse must be uint16[256]")
        self.forward.setflags(write=False)
        self.inverse.setflags(write=False)


def _build_inverse(forward: np.ndarray) -> np.ndarray:
    """Midpoint-of-preimage inverse; unproduced levels borrow the nearest
    produced level's representative (ties toward the lower level)."""
    levels = np.arange(256)
    first = np.searchsorted(forward, levels, side="left")
    last = np.searchsorted(forward, levels, side="right") - 1
    produced = first <= last
    inverse = np.zeros(256, dtype=np.int64)
    inverse[produced] = (first[produced] + last[produced]) // 2
    produced_levels = levels[produced]
    for lv in levels[~produced]:
        nearest = produced_levels[np.argmin(np.abs(produced_levels - lv))]
        inverse[lv] = inverse[nearest]
    return inverse.astype(np.uint16)


def _curve_from_forward(forward: np.ndarray) -> ToneMapCurve:
    forward = np.maximum.accumulate(forward.astype(np.uint8))
    return ToneMapCurve(forward, _build_inverse(forward))


def _constant_curve(code: int) -> ToneMapCurve:
    # Single occupied code: pin it to mid-gray so its preimage midpoint is
    # exactly the code and a clean base layer reproduces the image with an
    # all-zero residual.
    forward = np.zeros(65536, dtype=np.uint8)
    forward[code] = 128
    forward[code + 1 :] = 255
    return _curve_from_forward(forward)


def _linear_curve(bit_depth: int) -> ToneMapCurve:
    maxcode = (1 << bit_depth) - 1
    codes = np.arange(65536, dtype=np.int64)
    scaled = (np.minimum(codes, maxcode) * 255 * 2 + maxcode) // (2 * maxcode)
    return _curve_from_forward(scaled.astype(np.uint8))


def _log_stretch_curve(img: HdrImage) -> ToneMapCurve:
    # Percentile stretch of log2(value) over positive finite halves.
    # Codes order positives monotonically, so the forward stays monotone.
    samples = img.planes.reshape(-1)
    positive = samples[(samples >= 1) & (samples <= 0x7BFF)]
    if positive.size == 0:
        # No positive finite values at all: fall back to a plain code scale.
        return _curve_from_forward((np.arange(65536) >> 8).astype(np.uint8))
    logs = np.sort(np.log2(code_to_half(positive).astype(np.float64)))
    n = logs.size
    lo = logs[(n - 1) // 100]
    hi = logs[(n - 1) - (n - 1) // 100]
    pos_codes = np.arange(1, 0x7C00, dtype=np.uint16)
    pos_logs = np.log2(code_to_half(pos_codes).astype(np.float64))
    if hi - lo < 1e-9:
        # Nearly single-valued: center on the common value, 42.5 levels
        # per octave on either side.
        levels = np.rint(128.0 + 42.5 * (pos_logs - lo))
    else:
        levels = np.rint(255.0 * (pos_logs - lo) / (hi - lo))
    forward = np.empty(65536, dtype=np.uint8)
    forward[0] = 0
    forward[1:0x7C00] = np.clip(levels, 0.0, 255.0).astype(np.uint8)
    forward[0x7C00:] = 255  # inf, NaN and all negative codes saturate
    return _curve_from_forward(forward)


def build_tmo(img: HdrImage) -> ToneMapCurve:
    """Build the default curve for an image (see module docstring)."""
    lo = int(img.planes.min())
    hi = int(img.planes.max())
    if lo == hi:
        return _constant_curve(lo)
    if img.pixel_type == PixelType.INTEGER:
        return _linear_curve(img.bit_depth)
    return _log_stretch_curve(img)


def tone_map(img: HdrImage, curve: ToneMapCurve) -> LdrImage:
    """Apply the forward lookup per sample."""
    return LdrImage(img.width, img.height, curve.forward[img.planes])


def reconstruct_codes(base: LdrImage, curve_inverse: np.ndarray) -> np.ndarray:
    """Map a decoded base layer back into the code domain (int32 planes)."""
    return curve_inverse[base.planes].astype(np.int32)


def serialize_curve(curve: ToneMapCurve) -> bytes:
    """The wire form is the 256-entry inverse, little-endian uint16."""
    return curve.inverse.astype("<u2").tobytes()


def deserialize_inverse(blob: bytes) -> np.ndarray:
    """Parse the wire form back into the inverse lookup."""
    if len(blob) != CURVE_BYTES:
        raise ContainerFormatError(
            f"tone-map curve blob must be {CURVE_BYTES} bytes, got {len(blob)}"
        )
    return np.frombuffer(blob, dtype="<u2").astype(np.uint16)
