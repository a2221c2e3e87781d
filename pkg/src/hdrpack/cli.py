"""Command-line front end.

A thin client over the service handlers: by default they run in-process;
with ``--server URL`` every command is sent to a running service instead,
so the CLI never contains codec logic of its own.

Exit codes: 0 success, 1 unexpected failure, 2 usage, 3 I/O, 4 malformed
input (image, JPEG or container), 5 verification mismatch, 6 recognized
but unsupported version/id.
"""

from __future__ import annotations

import argparse
import base64
import csv
import json
import sys
from pathlib import Path

from . import pipeline, service
from .errors import (
    BackendFormatError,
    ChecksumError,
    CodecError,
    ContainerFormatError,
    ImageFormatError,
    JpegFormatError,
    PackingError,
    TableFormatError,
    UnsupportedError,
    VerificationError,
)
from .image_io import FORMATS

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_VERIFY = 5
EXIT_UNSUPPORTED = 6

_ERROR_EXIT_CODES = {
    ImageFormatError: EXIT_FORMAT,
    JpegFormatError: EXIT_FORMAT,
    ContainerFormatError: EXIT_FORMAT,
    ChecksumError: EXIT_FORMAT,
    TableFormatError: EXIT_FORMAT,
    BackendFormatError: EXIT_FORMAT,
    PackingError: EXIT_FORMAT,
    UnsupportedError: EXIT_UNSUPPORTED,
    VerificationError: EXIT_VERIFY,
}

_ENDPOINTS = {
    "encode": (service.EncodeRequest, service.EncodeResponse),
    "decode": (service.DecodeRequest, service.DecodeResponse),
    "verify": (service.VerifyRequest, service.VerifyResponse),
    "stats": (service.StatsRequest, service.StatsResponse),
    "inspect": (service.InspectRequest, service.InspectResponse),
    "strip": (service.StripRequest, service.StripResponse),
    "sweep": (service.SweepRequest, service.SweepResponse),
}


class RemoteError(CodecError):
    def __init__(self, error: str, message: str):
        super().__init__(message)
        self.error = error


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, RemoteError):
        by_name = {cls.__name__: code for cls, code in _ERROR_EXIT_CODES.items()}
        return by_name.get(exc.error, EXIT_FORMAT)
    for cls, code in _ERROR_EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_UNEXPECTED


class LocalClient:
    def call(self, name, request):
        handler = getattr(service, f"handle_{name}")
        return handler(request)


class HttpClient:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")

    def call(self, name, request):
        import httpx

        response = httpx.post(
            f"{self.base_url}/v1/{name}",
            json=request.model_dump(),
            timeout=600.0,
        )
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", {})
            except ValueError:
                detail = {}
            raise RemoteError(
                detail.get("error", "HTTPError"),
                detail.get("message", f"HTTP {response.status_code}"),
            )
        return _ENDPOINTS[name][1].model_validate(response.json())


def _client(args) -> LocalClient | HttpClient:
    return HttpClient(args.server) if args.server else LocalClient()


# ---------------------------------------------------------------------------
# Argument plumbing


def _detect_format(path: str, explicit: str | None) -> str:
    fmt = explicit or Path(path).suffix.lstrip(".").lower()
    if fmt not in FORMATS:
        raise ImageFormatError(
            f"cannot infer image format for {path!r}; pass --format"
        )
    return fmt


def _image_source_args(parser):
    parser.add_argument("--format", choices=FORMATS, default=None,
                        help="input format (default: from file extension)")
    parser.add_argument("--width", type=int, help="raw format: image width")
    parser.add_argument("--height", type=int, help="raw format: image height")
    parser.add_argument("--pixel-type", choices=["half", "integer"], default="half",
                        help="raw format: code interpretation")
    parser.add_argument("--bit-depth", type=int, default=16,
                        help="raw format: bits per component for integer images")
    parser.add_argument("--allow-nan", action="store_true",
                        help="accept NaN samples in PFM input")


def _coding_args(parser):
    parser.add_argument("--q", type=int, default=pipeline.DEFAULT_Q,
                        help="base-layer JPEG quality 0..100")
    parser.add_argument("--backend", choices=["store", "medrice"], default="medrice",
                        help="lossless coder for the packed residual planes")
    parser.add_argument("--color", choices=["identity", "rct"], default="rct",
                        help="residual color transform")
    parser.add_argument("--table-compressor", choices=["raw", "deflate", "bzip2"],
                        default="deflate", help="unpacking-table compressor")
    parser.add_argument("--no-verify", action="store_true",
                        help="skip the internal decode-and-compare after encoding")


def _source_fields(args, path: str) -> dict:
    return {
        "image_b64": base64.b64encode(Path(path).read_bytes()).decode("ascii"),
        "format": _detect_format(path, args.format),
        "width": args.width,
        "height": args.height,
        "pixel_type": args.pixel_type,
        "bit_depth": args.bit_depth,
        "allow_nan": args.allow_nan,
    }


def _coding_fields(args) -> dict:
    return {
        "q": args.q,
        "backend": args.backend,
        "color": args.color,
        "table_compressor": args.table_compressor,
        "verify": not args.no_verify,
    }


def _stats_row(stats: service.StatsModel) -> dict:
    row = stats.model_dump(exclude={"components"})
    for c, comp in enumerate(stats.components):
        row[f"alpha_pre_{c}"] = comp.alpha_pre
        row[f"alpha_post_{c}"] = comp.alpha_post
    return row


def _write_csv(path: str | None, columns, rows) -> None:
    stream = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        writer = csv.DictWriter(stream, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if stream is not sys.stdout:
            stream.close()


def _print_stats(stats: service.StatsModel, as_json: bool) -> None:
    if as_json:
        print(json.dumps(stats.model_dump(), indent=2))
        return
    print(
        f"{stats.width}x{stats.height} q={stats.q} backend={stats.backend} "
        f"transform={stats.transform}"
    )
    print(
        f"  container {stats.container_bytes} B ({stats.total_bpp:.3f} bpp): "
        f"base {stats.base_bytes} B, planes {stats.extension_bytes} B, "
        f"tables {stats.table_bytes} B, overhead {stats.overhead_bytes} B"
    )
    print(f"  table overhead {stats.table_overhead_pct:.3f}% of container")
    for c, comp in enumerate(stats.components):
        print(
            f"  component {c}: alpha {comp.alpha_pre:.4f} -> "
            f"{comp.alpha_post:.4f} (occupied {comp.occupied_pre} "
            f"of range {comp.range_pre})"
        )
    if stats.verified:
        print("  round trip verified lossless")


# ---------------------------------------------------------------------------
# Commands


def _cmd_encode(args) -> int:
    req = service.EncodeRequest(
        **_source_fields(args, args.input), **_coding_fields(args)
    )
    resp = _client(args).call("encode", req)
    Path(args.output).write_bytes(base64.b64decode(resp.container_b64))
    if args.csv:
        _write_csv(args.csv, pipeline.SWEEP_COLUMNS, [_stats_row(resp.stats)])
    _print_stats(resp.stats, args.json)
    return EXIT_OK


def _cmd_decode(args) -> int:
    fmt = args.format
    if fmt is None:
        ext = Path(args.output).suffix.lstrip(".").lower()
        fmt = ext if ext in FORMATS else None  # None: service picks by pixel type
    req = service.DecodeRequest(
        container_b64=base64.b64encode(Path(args.input).read_bytes()).decode("ascii"),
        format=fmt,
    )
    resp = _client(args).call("decode", req)
    Path(args.output).write_bytes(base64.b64decode(resp.image_b64))
    print(
        f"decoded {resp.width}x{resp.height} {resp.pixel_type} "
        f"({resp.bit_depth}-bit) -> {args.output}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    req = service.VerifyRequest(
        **_source_fields(args, args.original),
        container_b64=base64.b64encode(
            Path(args.container).read_bytes()
        ).decode("ascii"),
    )
    resp = _client(args).call("verify", req)
    if resp.lossless:
        print("PASS: container decodes to the original bit-exactly")
        return EXIT_OK
    if resp.first_difference is not None:
        d = resp.first_difference
        print(
            f"FAIL: first difference at component {d.component}, "
            f"x={d.x}, y={d.y}: expected {d.expected}, got {d.actual}"
        )
    else:
        print(f"FAIL: {resp.error}")
    return EXIT_VERIFY


def _cmd_stats(args) -> int:
    req = service.StatsRequest(
        **_source_fields(args, args.input), **_coding_fields(args)
    )
    resp = _client(args).call("stats", req)
    if args.csv:
        _write_csv(args.csv, pipeline.SWEEP_COLUMNS, [_stats_row(resp.stats)])
    else:
        _print_stats(resp.stats, args.json)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    req = service.InspectRequest(
        container_b64=base64.b64encode(Path(args.input).read_bytes()).decode("ascii")
    )
    resp = _client(args).call("inspect", req)
    if args.json:
        print(json.dumps(resp.model_dump(), indent=2))
    else:
        for key, value in resp.model_dump().items():
            print(f"{key}: {value}")
    return EXIT_OK


def _cmd_strip(args) -> int:
    req = service.StripRequest(
        container_b64=base64.b64encode(Path(args.input).read_bytes()).decode("ascii")
    )
    resp = _client(args).call("strip", req)
    Path(args.output).write_bytes(base64.b64decode(resp.jpeg_b64))
    print(f"stripped base layer -> {args.output}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    q_values = [int(v) for v in args.q_list.split(",")] if args.q_list else list(
        pipeline.DEFAULT_SWEEP_QS
    )
    req = service.SweepRequest(
        **_source_fields(args, args.input),
        q_values=q_values,
        backends=args.backends.split(","),
        color=args.color,
        table_compressor=args.table_compressor,
        verify=not args.no_verify,
        jobs=args.jobs,
    )
    resp = _client(args).call("sweep", req)
    _write_csv(args.csv, resp.columns, resp.rows)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdrpack",
        description="Two-layer lossless HDR codec with a legacy-JPEG base layer.",
    )
    parser.add_argument("--server", default=None,
                        help="send the command to a running hdrpack service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode an image into a container")
    p.add_argument("input")
    p.add_argument("output")
    _image_source_args(p)
    _coding_args(p)
    p.add_argument("--csv", help="also write the stats row as CSV")
    p.add_argument("--json", action="store_true", help="print stats as JSON")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="reconstruct the original image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=FORMATS, default=None,
                   help="output format (default: from file extension)")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("verify", help="check a container against the original")
    p.add_argument("original")
    p.add_argument("container")
    _image_source_args(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("stats", help="report sparseness and size breakdown")
    p.add_argument("input")
    _image_source_args(p)
    _coding_args(p)
    p.add_argument("--csv", help="write the stats row as CSV")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("inspect", help="show container header and part sizes")
    p.add_argument("input")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("strip", help="remove the extension layer")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_strip)

    p = sub.add_parser("sweep", help="bitrate vs q sweep as CSV")
    p.add_argument("input")
    _image_source_args(p)
    p.add_argument("--q-list", help="comma-separated q values (default 0,10,..,100)")
    p.add_argument("--backends", default="medrice",
                   help="comma-separated backends to sweep")
    p.add_argument("--color", choices=["identity", "rct"], default="rct")
    p.add_argument("--table-compressor", choices=["raw", "deflate", "bzip2"],
                   default="deflate")
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers across sweep points")
    p.add_argument("--csv", help="output CSV path (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CodecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
