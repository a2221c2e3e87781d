"""Exception hierarchy.

Every failure mode of the codec raises a subclass of :class:`CodecError` so
callers (CLI, service, fuzz harnesses) can tell a corrupt input apart from a
bug. Decode paths never let bare ``ValueError``/``struct.error`` escape.
"""


class CodecError(Exception):
    """Base class for all codec failures."""


class ImageFormatError(CodecError):
    """Malformed or unsupported image file (PFM/PPM/PGM/raw)."""


class NanPolicyError(ImageFormatError):
    """PFM input contains NaN samples and NaN ingestion was not enabled."""


class JpegFormatError(CodecError):
    """Malformed or unsupported JPEG codestream."""


class ContainerFormatError(CodecError):
    """Malformed container: bad magic, chunking, directory or field values."""


class ChecksumError(ContainerFormatError):
    """A stored CRC-32 does not match the data it covers."""


class TableFormatError(CodecError):
    """Malformed unpacking-table stream (bad varint, non-positive delta, ...)."""


class BackendFormatError(CodecError):
    """Malformed plane codestream (truncation, sample overflow, bad id)."""


class PackingError(CodecError):
    """Plane/packing-map mismatch or out-of-range index."""


class UnsupportedError(CodecError):
    """Recognized but unsupported version, backend or compressor id."""


class VerificationError(CodecError):
    """Decoded output does not match the encoder input bit-exactly."""
