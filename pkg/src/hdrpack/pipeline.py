"""End-to-end two-layer encode/decode and the measurement plumbing.

Encode: tone-map to 8 bits, JPEG the base layer at quality q, decode that
JPEG with the bundled decoder, subtract the inverse-mapped reconstruction
from the original codes, color-transform the residual, histogram-pack
each component, entropy-code the index planes, and multiplex everything
into one legacy-decodable file. Decode mirrors it exactly; a stored CRC
of the original planes makes any corruption fail loudly instead of
returning non-lossless pixels.

q is the only knob that affects the rate split between layers; every
other parameter has a fixed default, so encoding needs no per-image
tuning.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .container import ExtensionHeader, demux, mux, strip_extension
from .errors import ChecksumError, ContainerFormatError, VerificationError
from .histogram_pack import (
    SparsenessReport,
    TableCompressor,
    build_histogram,
    build_packing,
    decode_table,
    encode_table,
    pack_plane,
    sparseness,
    unpack_plane,
)
from .image_io import HdrImage, PixelType, first_difference, images_equal
from .jpeg import jpeg_decode, jpeg_encode
from .lossless_backend import BackendId, decode_plane, encode_plane
from .residual import (
    ResidualPlanes,
    TransformId,
    apply_transform,
    compute_residual,
    reconstruct_hdr,
    undo_transform,
)
from .tonemap import build_tmo, deserialize_inverse, serialize_curve, tone_map

DEFAULT_Q = 80

# Unpacked table values must stay well inside int32 for the index planes.
_MAX_RESIDUAL_VALUE = 1 << 30

# Canonical names shared by reports, CSV columns, CLI flags and the service.
BACKEND_NAMES = {BackendId.STORE: "store", BackendId.MED_RICE: "medrice"}
TRANSFORM_NAMES = {
    TransformId.IDENTITY: "identity",
    TransformId.REVERSIBLE_YCBCR: "rct",
}
PIXEL_TYPE_NAMES = {PixelType.HALF_FLOAT: "half", PixelType.INTEGER: "integer"}


@dataclass(frozen=True)
class EncodeParams:
    """Everything the encoder accepts; only ``q`` is meant to be swept."""

    q: int = DEFAULT_Q
    backend: BackendId = BackendId.MED_RICE
    transform: TransformId = TransformId.REVERSIBLE_YCBCR
    table_compressor: TableCompressor = TableCompressor.DEFLATE
    verify: bool = True

    def __post_init__(self):
        if not 0 <= self.q <= 100:
            raise ValueError("q must be in 0..100")


@dataclass(frozen=True)
class ComponentStats:
    pre: SparsenessReport
    post: SparsenessReport
    table_bytes: int
    plane_bytes: int


@dataclass(frozen=True)
class StatsReport:
    """Size breakdown of one container; byte fields sum exactly to
    ``container_bytes`` (bpp fields are those counts times 8 / pixels)."""

    width: int
    height: int
    q: int
    backend: BackendId
    transform: TransformId
    table_compressor: TableCompressor
    container_bytes: int
    base_bytes: int
    extension_bytes: int
    table_bytes: int
    overhead_bytes: int
    components: tuple[ComponentStats, ...]
    verified: bool

    @property
    def pixels(self) -> int:
        return self.width * self.height

    def _bpp(self, nbytes: int) -> float:
        return nbytes * 8.0 / self.pixels

    @property
    def total_bpp(self) -> float:
        return self._bpp(self.container_bytes)

    @property
    def base_bpp(self) -> float:
        return self._bpp(self.base_bytes)

    @property
    def extension_bpp(self) -> float:
        return self._bpp(self.extension_bytes)

    @property
    def table_bpp(self) -> float:
        return self._bpp(self.table_bytes)

    @property
    def overhead_bpp(self) -> float:
        return self._bpp(self.overhead_bytes)

    @property
    def table_overhead_pct(self) -> float:
        return 100.0 * self.table_bytes / self.container_bytes

    def as_dict(self) -> dict:
        d = {
            "width": self.width,
            "height": self.height,
            "pixels": self.pixels,
            "q": self.q,
            "backend": BACKEND_NAMES[self.backend],
            "transform": TRANSFORM_NAMES[self.transform],
            "table_compressor": self.table_compressor.name.lower(),
            "container_bytes": self.container_bytes,
            "base_bytes": self.base_bytes,
            "extension_bytes": self.extension_bytes,
            "table_bytes": self.table_bytes,
            "overhead_bytes": self.overhead_bytes,
            "total_bpp": self.total_bpp,
            "base_bpp": self.base_bpp,
            "extension_bpp": self.extension_bpp,
            "table_bpp": self.table_bpp,
            "overhead_bpp": self.overhead_bpp,
            "table_overhead_pct": self.table_overhead_pct,
            "verified": self.verified,
        }
        for c, comp in enumerate(self.components):
            d[f"alpha_pre_{c}"] = comp.pre.alpha
            d[f"alpha_post_{c}"] = comp.post.alpha
            d[f"occupied_pre_{c}"] = comp.pre.occupied
            d[f"range_pre_{c}"] = comp.pre.range
        return d


def pixel_crc(planes: np.ndarray) -> int:
    """CRC-32 over the three planes as little-endian 16-bit samples."""
    crc = 0
    for c in range(planes.shape[0]):
        crc = zlib.crc32(np.ascontiguousarray(planes[c]).astype("<u2").tobytes(), crc)
    return crc & 0xFFFFFFFF


def encode_image(
    img: HdrImage, params: EncodeParams = EncodeParams()
) -> tuple[bytes, StatsReport]:
    """Encode to container bytes; decodes back to ``img`` bit-exactly.

    With ``params.verify`` (the default) the round trip is checked here
    and a mismatch raises :class:`VerificationError`.
    """
    curve = build_tmo(img)
    ldr = tone_map(img, curve)
    jpeg_bytes = jpeg_encode(ldr, params.q)
    base = jpeg_decode(jpeg_bytes)

    res = compute_residual(img, base, curve)
    res = apply_transform(res, params.transform)

    tables: list[bytes] = []
    planes: list[bytes] = []
    comp_stats: list[ComponentStats] = []
    for c in range(3):
        hist = build_histogram(res.planes[c])
        pre = sparseness(hist)
        pmap, table = build_packing(hist)
        idx = pack_plane(res.planes[c], pmap)
        post = sparseness(build_histogram(idx.samples))
        tbl_bytes = encode_table(table, params.table_compressor)
        pln_bytes = encode_plane(idx, params.backend)
        tables.append(tbl_bytes)
        planes.append(pln_bytes)
        comp_stats.append(ComponentStats(pre, post, len(tbl_bytes), len(pln_bytes)))

    header = ExtensionHeader(
        pixel_type=img.pixel_type,
        bit_depth=img.bit_depth,
        q=params.q,
        transform_id=res.transform_id,
        backend_id=params.backend,
        table_compressor_id=params.table_compressor,
        width=img.width,
        height=img.height,
        pixel_crc=pixel_crc(img.planes),
    )
    container = mux(jpeg_bytes, header, tables, planes, serialize_curve(curve))

    verified = False
    if params.verify:
        decoded = decode_container(container)
        if not images_equal(img, decoded):
            diff = first_difference(img, decoded)
            raise VerificationError(
                f"round-trip mismatch at component {diff[0]}, "
                f"x={diff[1]}, y={diff[2]}: expected {diff[3]}, got {diff[4]}"
            )
        verified = True

    table_total = sum(len(t) for t in tables)
    ext_total = sum(len(p) for p in planes)
    report = StatsReport(
        width=img.width,
        height=img.height,
        q=params.q,
        backend=params.backend,
        transform=res.transform_id,
        table_compressor=params.table_compressor,
        container_bytes=len(container),
        base_bytes=len(jpeg_bytes),
        extension_bytes=ext_total,
        table_bytes=table_total,
        overhead_bytes=len(container) - len(jpeg_bytes) - ext_total - table_total,
        components=tuple(comp_stats),
        verified=verified,
    )
    return container, report


def decode_container(data: bytes) -> HdrImage:
    """Reconstruct the original image from a container, validating the
    stored plane CRC so corruption can never pass silently."""
    jpeg_bytes, header, table_blobs, plane_blobs, curve_blob = demux(data)
    base = jpeg_decode(jpeg_bytes)
    if (base.width, base.height) != (header.width, header.height):
        raise ContainerFormatError("base layer and header dimensions differ")
    inverse = deserialize_inverse(curve_blob)

    rec_planes = []
    for c in range(3):
        if table_blobs[c][:1] != bytes([int(header.table_compressor_id)]):
            raise ContainerFormatError("table compressor id differs from header")
        if plane_blobs[c][:1] != bytes([int(header.backend_id)]):
            raise ContainerFormatError("plane backend id differs from header")
        table = decode_table(table_blobs[c])
        if (
            int(table.values[0]) < -_MAX_RESIDUAL_VALUE
            or int(table.values[-1]) > _MAX_RESIDUAL_VALUE
        ):
            raise ContainerFormatError("unpacking table value out of range")
        idx = decode_plane(plane_blobs[c])
        if (idx.width, idx.height) != (header.width, header.height):
            raise ContainerFormatError("plane dimensions differ from header")
        rec_planes.append(unpack_plane(idx, table))

    res = ResidualPlanes(
        np.stack(rec_planes).astype(np.int32), header.transform_id
    )
    res = undo_transform(res)
    img = reconstruct_hdr(res, base, inverse, header.pixel_type, header.bit_depth)
    if pixel_crc(img.planes) != header.pixel_crc:
        raise ChecksumError("reconstructed planes do not match stored CRC")
    return img


def verify_pair(original: HdrImage, container: bytes):
    """Decode ``container`` and compare with ``original``.

    Returns (lossless, first_difference); decode errors propagate.
    """
    decoded = decode_container(container)
    if images_equal(original, decoded):
        return True, None
    return False, first_difference(original, decoded)


def inspect_container(data: bytes) -> dict:
    """Header fields and part sizes of a container, without decoding."""
    jpeg_bytes, header, tables, planes, curve = demux(data)
    return {
        "version": header.version,
        "pixel_type": PIXEL_TYPE_NAMES[header.pixel_type],
        "bit_depth": header.bit_depth,
        "q": header.q,
        "transform": TRANSFORM_NAMES[header.transform_id],
        "backend": BACKEND_NAMES[header.backend_id],
        "table_compressor": header.table_compressor_id.name.lower(),
        "width": header.width,
        "height": header.height,
        "pixel_crc": f"{header.pixel_crc:08x}",
        "container_bytes": len(data),
        "base_bytes": len(jpeg_bytes),
        "curve_bytes": len(curve),
        "table_bytes": [len(t) for t in tables],
        "plane_bytes": [len(p) for p in planes],
    }


# ---------------------------------------------------------------------------
# Sweeps

SWEEP_COLUMNS = [
    "q",
    "backend",
    "width",
    "height",
    "pixels",
    "container_bytes",
    "base_bytes",
    "extension_bytes",
    "table_bytes",
    "overhead_bytes",
    "total_bpp",
    "base_bpp",
    "extension_bpp",
    "table_bpp",
    "overhead_bpp",
    "table_overhead_pct",
    "alpha_pre_0",
    "alpha_pre_1",
    "alpha_pre_2",
    "alpha_post_0",
    "alpha_post_1",
    "alpha_post_2",
    "verified",
]

DEFAULT_SWEEP_QS = tuple(range(0, 101, 10))


def sweep(
    img: HdrImage,
    q_values=DEFAULT_SWEEP_QS,
    backends=(BackendId.MED_RICE,),
    base_params: EncodeParams = EncodeParams(),
    jobs: int | None = None,
) -> list[dict]:
    """Encode at every (q, backend) point, in parallel, one row per point.

    Every point is round-trip verified unless ``base_params`` disables it.
    """
    points = [(q, b) for b in backends for q in q_values]

    def run(point):
        q, backend = point
        params = EncodeParams(
            q=q,
            backend=BackendId(backend),
            transform=base_params.transform,
            table_compressor=base_params.table_compressor,
            verify=base_params.verify,
        )
        _, report = encode_image(img, params)
        row = report.as_dict()
        return {k: row[k] for k in SWEEP_COLUMNS}

    if jobs is None:
        jobs = min(len(points), 8)
    if jobs <= 1 or len(points) <= 1:
        return [run(p) for p in points]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, points))


__all__ = [
    "DEFAULT_Q",
    "DEFAULT_SWEEP_QS",
    "SWEEP_COLUMNS",
    "ComponentStats",
    "EncodeParams",
    "StatsReport",
    "decode_container",
    "encode_image",
    "inspect_container",
    "pixel_crc",
    "strip_extension",
    "sweep",
    "verify_pair",
]
