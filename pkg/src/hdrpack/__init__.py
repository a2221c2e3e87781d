"""hdrpack: two-layer lossless HDR image codec.

A baseline JPEG carries a tone-mapped 8-bit base layer that any legacy
decoder renders; APP11 extension segments carry the histogram-packed
residual that reconstructs the original 16-bit (or half-float) image bit
for bit. See :mod:`hdrpack.pipeline` for the end-to-end entry points.
"""

from .errors import (
    BackendFormatError,
    ChecksumError,
    CodecError,
    ContainerFormatError,
    ImageFormatError,
    JpegFormatError,
    NanPolicyError,
    PackingError,
    TableFormatError,
    UnsupportedError,
    VerificationError,
)
from .histogram_pack import (
    IndexPlane,
    PackingMap,
    SparseHistogram,
    SparsenessReport,
    TableCompressor,
    UnpackingTable,
    build_histogram,
    build_packing,
    decode_table,
    encode_table,
    pack_plane,
    sparseness,
    unpack_plane,
)
from .image_io import (
    HdrImage,
    LdrImage,
    PixelType,
    code_to_half,
    half_to_code,
    images_equal,
    parse_image,
    read_image,
    write_image,
)
from .jpeg import jpeg_decode, jpeg_encode
from .lossless_backend import BackendId, decode_plane, encode_plane, med_predict
from .pipeline import (
    EncodeParams,
    StatsReport,
    decode_container,
    encode_image,
    inspect_container,
    sweep,
    verify_pair,
)
from .residual import (
    ResidualPlanes,
    TransformId,
    color_forward,
    color_inverse,
    compute_residual,
    reconstruct_hdr,
)
from .container import ExtensionHeader, demux, mux, strip_extension
from .tonemap import ToneMapCurve, build_tmo, tone_map

__version__ = "0.1.0"

__all__ = [
    "BackendFormatError",
    "BackendId",
    "ChecksumError",
    "CodecError",
    "ContainerFormatError",
    "EncodeParams",
    "ExtensionHeader",
    "HdrImage",
    "ImageFormatError",
    "IndexPlane",
    "JpegFormatError",
    "LdrImage",
    "NanPolicyError",
    "PackingError",
    "PackingMap",
    "PixelType",
    "ResidualPlanes",
    "SparseHistogram",
    "SparsenessReport",
    "StatsReport",
    "TableCompressor",
    "TableFormatError",
    "ToneMapCurve",
    "TransformId",
    "UnpackingTable",
    "UnsupportedError",
    "VerificationError",
    "build_histogram",
    "build_packing",
    "build_tmo",
    "code_to_half",
    "color_forward",
    "color_inverse",
    "compute_residual",
    "decode_container",
    "decode_plane",
    "decode_table",
    "demux",
    "encode_image",
    "encode_plane",
    "encode_table",
    "half_to_code",
    "images_equal",
    "inspect_container",
    "jpeg_decode",
    "jpeg_encode",
    "med_predict",
    "mux",
    "pack_plane",
    "parse_image",
    "read_image",
    "reconstruct_hdr",
    "sparseness",
    "strip_extension",
    "sweep",
    "tone_map",
    "unpack_plane",
    "verify_pair",
    "write_image",
]
