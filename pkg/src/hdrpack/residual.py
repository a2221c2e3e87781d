"""Extension-layer residual: original codes minus the inverse-mapped
decoded base layer, plus a reversible luma/chroma transform.

The subtraction runs in exact integer arithmetic; pre-transform residuals
fit a signed 17-bit range because both operands are 16-bit codes. A
real-weight color conversion would lose bits, so the decorrelating
transform is the reversible integer one (floor-division luma, exact
chroma differences); ``Identity`` stays available and the choice travels
in the container.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContainerFormatError
from .image_io import HdrImage, LdrImage, PixelType
from .tonemap import ToneMapCurve, reconstruct_codes


class TransformId(enum.IntEnum):
    IDENTITY = 0
    REVERSIBLE_YCBCR = 1


@dataclass(frozen=True)
class ResidualPlanes:
    """Three signed residual rasters and the transform applied to them."""

    planes: np.ndarray  # int32, shape (3, h, w)
    transform_id: TransformId

    def __post_init__(self):
        if self.planes.ndim != 3 or self.planes.shape[0] != 3:
            raise ValueError("residual planes must have shape (3, h, w)")
        if self.planes.dtype != np.int32:
            raise ValueError("residual planes must be int32")

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


def compute_residual(
    hdr: HdrImage, base: LdrImage, curve: ToneMapCurve
) -> ResidualPlanes:
    """Per-sample difference between original codes and the base-layer
    reconstruction ``inverse[level]``."""
    if (hdr.width, hdr.height) != (base.width, base.height):
        raise ValueError("image and base-layer dimensions differ")
    rec = reconstruct_codes(base, curve.inverse)
    res = hdr.planes.astype(np.int32) - rec
    assert int(np.abs(res).max(initial=0)) <= 65535  # 17-bit signed range
    return ResidualPlanes(res, TransformId.IDENTITY)


def reconstruct_hdr(
    res: ResidualPlanes,
    base: LdrImage,
    curve_inverse: np.ndarray,
    pixel_type: PixelType,
    bit_depth: int,
) -> HdrImage:
    """Exact inverse of :func:`compute_residual` given the same base and
    curve; validates that samples land back in the declared code range."""
    if res.planes.shape[1:] != base.planes.shape[1:]:
        raise ValueError("residual and base-layer dimensions differ")
    if res.transform_id != TransformId.IDENTITY:
        raise ValueError("residual must be inverse-transformed first")
    rec = reconstruct_codes(base, curve_inverse)
    codes = res.planes.astype(np.int64) + rec
    limit = 65536 if pixel_type == PixelType.HALF_FLOAT else 1 << bit_depth
    if codes.size and (int(codes.min()) < 0 or int(codes.max()) >= limit):
        raise ContainerFormatError("reconstructed sample out of code range")
    return HdrImage(
        base.width, base.height, codes.astype(np.uint16), pixel_type, bit_depth
    )


def color_forward(res: ResidualPlanes) -> ResidualPlanes:
    """Reversible luma/chroma transform of the residual components."""
    if res.transform_id != TransformId.IDENTITY:
        raise ValueError("transform already applied")
    r = res.planes[0].astype(np.int64)
    g = res.planes[1].astype(np.int64)
    b = res.planes[2].astype(np.int64)
    y = (r + 2 * g + b) >> 2  # floor division, exact inverse exists
    cb = b - g
    cr = r - g
    out = np.stack([y, cb, cr]).astype(np.int32)
    return ResidualPlanes(out, TransformId.REVERSIBLE_YCBCR)


def color_inverse(res: ResidualPlanes) -> ResidualPlanes:
    """Exact inverse of :func:`color_forward`."""
    if res.transform_id != TransformId.REVERSIBLE_YCBCR:
        raise ValueError("residual is not color-transformed")
    y = res.planes[0].astype(np.int64)
    cb = res.planes[1].astype(np.int64)
    cr = res.planes[2].astype(np.int64)
    g = y - ((cb + cr) >> 2)
    r = cr + g
    b = cb + g
    out = np.stack([r, g, b]).astype(np.int32)
    return ResidualPlanes(out, TransformId.IDENTITY)


def apply_transform(res: ResidualPlanes, transform: TransformId) -> ResidualPlanes:
    if TransformId(transform) == TransformId.REVERSIBLE_YCBCR:
        return color_forward(res)
    return res


def undo_transform(res: ResidualPlanes) -> ResidualPlanes:
    if res.transform_id == TransformId.REVERSIBLE_YCBCR:
        return color_inverse(res)
    return res
