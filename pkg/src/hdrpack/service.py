"""HTTP service around the codec.

Request and response bodies are JSON with base64-encoded binary payloads,
so any client can drive the codec without knowing the wire formats. The
handler functions are plain pydantic-in/pydantic-out so the CLI calls
them in-process; the FastAPI routes only add HTTP error translation.
"""

from __future__ import annotations

import base64
import binascii
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import pipeline
from .errors import CodecError, ImageFormatError, VerificationError
from .histogram_pack import TableCompressor
from .image_io import HdrImage, PixelType, image_bytes, parse_image
from .lossless_backend import BackendId
from .residual import TransformId

BACKENDS = {"store": BackendId.STORE, "medrice": BackendId.MED_RICE}
COLORS = {"identity": TransformId.IDENTITY, "rct": TransformId.REVERSIBLE_YCBCR}
COMPRESSORS = {
    "raw": TableCompressor.RAW,
    "deflate": TableCompressor.DEFLATE,
    "bzip2": TableCompressor.BZIP2,
}
PIXEL_TYPES = {"half": PixelType.HALF_FLOAT, "integer": PixelType.INTEGER}

FormatName = Literal["pfm", "ppm", "pgm", "raw"]


class ImageSource(BaseModel):
    """An uploaded image: bytes plus enough metadata to parse them."""

    image_b64: str
    format: FormatName = "pfm"
    width: Optional[int] = None  # raw format only
    height: Optional[int] = None
    pixel_type: Literal["half", "integer"] = "half"
    bit_depth: int = Field(default=16, ge=1, le=16)
    allow_nan: bool = False


class CodingParams(BaseModel):
    q: int = Field(default=pipeline.DEFAULT_Q, ge=0, le=100)
    backend: Literal["store", "medrice"] = "medrice"
    color: Literal["identity", "rct"] = "rct"
    table_compressor: Literal["raw", "deflate", "bzip2"] = "deflate"
    verify: bool = True


class EncodeRequest(ImageSource, CodingParams):
    pass


class ComponentStatsModel(BaseModel):
    alpha_pre: float
    alpha_post: float
    occupied_pre: int
    range_pre: int
    table_bytes: int
    plane_bytes: int


class StatsModel(BaseModel):
    width: int
    height: int
    pixels: int
    q: int
    backend: str
    transform: str
    table_compressor: str
    container_bytes: int
    base_bytes: int
    extension_bytes: int
    table_bytes: int
    overhead_bytes: int
    total_bpp: float
    base_bpp: float
    extension_bpp: float
    table_bpp: float
    overhead_bpp: float
    table_overhead_pct: float
    verified: bool
    components: list[ComponentStatsModel]


class EncodeResponse(BaseModel):
    container_b64: str
    stats: StatsModel


class DecodeRequest(BaseModel):
    container_b64: str
    format: Optional[FormatName] = None  # default: pfm for half, ppm for integer


class DecodeResponse(BaseModel):
    image_b64: str
    format: FormatName
    width: int
    height: int
    pixel_type: Literal["half", "integer"]
    bit_depth: int


class VerifyRequest(ImageSource):
    container_b64: str


class FirstDifferenceModel(BaseModel):
    component: int
    x: int
    y: int
    expected: int
    actual: int


class VerifyResponse(BaseModel):
    lossless: bool
    first_difference: Optional[FirstDifferenceModel] = None
    error: Optional[str] = None


class StatsRequest(EncodeRequest):
    pass


class StatsResponse(BaseModel):
    stats: StatsModel


class InspectRequest(BaseModel):
    container_b64: str


class InspectResponse(BaseModel):
    version: int
    pixel_type: str
    bit_depth: int
    q: int
    transform: str
    backend: str
    table_compressor: str
    width: int
    height: int
    pixel_crc: str
    container_bytes: int
    base_bytes: int
    curve_bytes: int
    table_bytes: list[int]
    plane_bytes: list[int]


class StripRequest(BaseModel):
    container_b64: str


class StripResponse(BaseModel):
    jpeg_b64: str


class SweepRequest(ImageSource):
    q_values: list[int] = Field(default_factory=lambda: list(pipeline.DEFAULT_SWEEP_QS))
    backends: list[Literal["store", "medrice"]] = Field(
        default_factory=lambda: ["medrice"]
    )
    color: Literal["identity", "rct"] = "rct"
    table_compressor: Literal["raw", "deflate", "bzip2"] = "deflate"
    verify: bool = True
    jobs: Optional[int] = None


class SweepResponse(BaseModel):
    columns: list[str]
    rows: list[dict]


# ---------------------------------------------------------------------------
# Handlers (shared by the HTTP routes and the in-process CLI client)


def _b64decode(text: str, what: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ImageFormatError(f"bad base64 in {what}: {exc}") from exc


def _image_from_source(src: ImageSource) -> HdrImage:
    return parse_image(
        _b64decode(src.image_b64, "image_b64"),
        src.format,
        width=src.width,
        height=src.height,
        pixel_type=PIXEL_TYPES[src.pixel_type],
        bit_depth=src.bit_depth,
        allow_nan=src.allow_nan,
    )


def _params_from(req: CodingParams) -> pipeline.EncodeParams:
    return pipeline.EncodeParams(
        q=req.q,
        backend=BACKENDS[req.backend],
        transform=COLORS[req.color],
        table_compressor=COMPRESSORS[req.table_compressor],
        verify=req.verify,
    )


def _stats_model(report: pipeline.StatsReport) -> StatsModel:
    d = report.as_dict()
    comps = [
        ComponentStatsModel(
            alpha_pre=c.pre.alpha,
            alpha_post=c.post.alpha,
            occupied_pre=c.pre.occupied,
            range_pre=c.pre.range,
            table_bytes=c.table_bytes,
            plane_bytes=c.plane_bytes,
        )
        for c in report.components
    ]
    fields = {k: d[k] for k in StatsModel.model_fields if k not in ("components", "pixels")}
    return StatsModel(pixels=report.pixels, components=comps, **fields)


def handle_encode(req: EncodeRequest) -> EncodeResponse:
    img = _image_from_source(req)
    container, report = pipeline.encode_image(img, _params_from(req))
    return EncodeResponse(
        container_b64=base64.b64encode(container).decode("ascii"),
        stats=_stats_model(report),
    )


def handle_decode(req: DecodeRequest) -> DecodeResponse:
    img = pipeline.decode_container(_b64decode(req.container_b64, "container_b64"))
    half = img.pixel_type == PixelType.HALF_FLOAT
    fmt = req.format or ("pfm" if half else "ppm")
    return DecodeResponse(
        image_b64=base64.b64encode(image_bytes(img, fmt)).decode("ascii"),
        format=fmt,
        width=img.width,
        height=img.height,
        pixel_type="half" if half else "integer",
        bit_depth=img.bit_depth,
    )


def handle_verify(req: VerifyRequest) -> VerifyResponse:
    original = _image_from_source(req)
    container = _b64decode(req.container_b64, "container_b64")
    try:
        lossless, diff = pipeline.verify_pair(original, container)
    except CodecError as exc:
        return VerifyResponse(
            lossless=False, error=f"{type(exc).__name__}: {exc}"
        )
    if lossless:
        return VerifyResponse(lossless=True)
    component, x, y, expected, actual = diff
    return VerifyResponse(
        lossless=False,
        first_difference=FirstDifferenceModel(
            component=component, x=x, y=y, expected=expected, actual=actual
        ),
    )


def handle_stats(req: StatsRequest) -> StatsResponse:
    img = _image_from_source(req)
    _, report = pipeline.encode_image(img, _params_from(req))
    return StatsResponse(stats=_stats_model(report))


def handle_inspect(req: InspectRequest) -> InspectResponse:
    info = pipeline.inspect_container(_b64decode(req.container_b64, "container_b64"))
    return InspectResponse(**info)


def handle_strip(req: StripRequest) -> StripResponse:
    jpeg = pipeline.strip_extension(_b64decode(req.container_b64, "container_b64"))
    return StripResponse(jpeg_b64=base64.b64encode(jpeg).decode("ascii"))


def handle_sweep(req: SweepRequest) -> SweepResponse:
    img = _image_from_source(req)
    base = pipeline.EncodeParams(
        transform=COLORS[req.color],
        table_compressor=COMPRESSORS[req.table_compressor],
        verify=req.verify,
    )
    rows = pipeline.sweep(
        img,
        q_values=req.q_values,
        backends=[BACKENDS[b] for b in req.backends],
        base_params=base,
        jobs=req.jobs,
    )
    return SweepResponse(columns=list(pipeline.SWEEP_COLUMNS), rows=rows)


# ---------------------------------------------------------------------------
# FastAPI app


def create_app() -> FastAPI:
    app = FastAPI(title="hdrpack", version="0.1.0")

    def guarded(handler, req):
        try:
            return handler(req)
        except VerificationError as exc:
            raise HTTPException(
                status_code=500,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        except CodecError as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": type(exc).__name__, "message": str(exc)},
            ) from exc
        except ValueError as exc:
            raise HTTPException(
                status_code=400,
                detail={"error": "ValueError", "message": str(exc)},
            ) from exc

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/encode", response_model=EncodeResponse)
    def encode(req: EncodeRequest):
        return guarded(handle_encode, req)

    @app.post("/v1/decode", response_model=DecodeResponse)
    def decode(req: DecodeRequest):
        return guarded(handle_decode, req)

    @app.post("/v1/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest):
        return guarded(handle_verify, req)

    @app.post("/v1/stats", response_model=StatsResponse)
    def stats(req: StatsRequest):
        return guarded(handle_stats, req)

    @app.post("/v1/inspect", response_model=InspectResponse)
    def inspect(req: InspectRequest):
        return guarded(handle_inspect, req)

    @app.post("/v1/strip", response_model=StripResponse)
    def strip(req: StripRequest):
        return guarded(handle_strip, req)

    @app.post("/v1/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        return guarded(handle_sweep, req)

    return app


app = create_app()
