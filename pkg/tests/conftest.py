"""Shared fixtures: deterministic image generators and the small
natural-image corpus used by the overhead measurements.

Set HDRPACK_CORPUS to a directory of .pfm/.ppm/.pgm files to run the
corpus-based tests against real images instead of the synthetic scenes.
"""

import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from hdrpack import HdrImage, PixelType, half_to_code, read_image

settings.register_profile("hdrpack", deadline=None, max_examples=40)
settings.load_profile("hdrpack")


def _box_blur_1d(arr: np.ndarray, radius: int, axis: int) -> np.ndarray:
    k = 2 * radius + 1
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius + 1, radius)
    padded = np.pad(arr, pad, mode="edge")
    c = np.cumsum(padded, axis=axis, dtype=np.float64)
    n = arr.shape[axis]
    hi = np.take(c, np.arange(k, k + n), axis=axis)
    lo = np.take(c, np.arange(0, n), axis=axis)
    return (hi - lo) / k


def _box_blur(arr: np.ndarray, radius: int) -> np.ndarray:
    # Separable box blur, used where a cheap smooth field is needed.
    if radius < 1:
        return np.asarray(arr, dtype=np.float64)
    return _box_blur_1d(_box_blur_1d(arr, radius, 0), radius, 1)


def smooth_field(rng, h, w, radius=8):
    """Random smooth field in [0, 1]."""
    base = rng.random((h, w))
    sm = _box_blur(_box_blur(base, radius), max(1, radius // 2))
    lo, hi = sm.min(), sm.max()
    if hi - lo < 1e-12:
        return np.zeros((h, w))
    return (sm - lo) / (hi - lo)


def integer_image(rng, w, h, bit_depth=12, kind="gradient") -> HdrImage:
    maxv = (1 << bit_depth) - 1
    if kind == "noise":
        planes = rng.integers(0, maxv + 1, (3, h, w))
    elif kind == "gradient":
        ramp = np.linspace(0, maxv, w)[None, :] * np.ones((h, 1))
        planes = np.stack(
            [np.clip(ramp + rng.normal(0, maxv / 64, (h, w)), 0, maxv) for _ in range(3)]
        )
    elif kind == "blocks":
        bh, bw = max(1, h // 4), max(1, w // 4)
        tiles = rng.integers(0, maxv + 1, (3, (h + bh - 1) // bh, (w + bw - 1) // bw))
        planes = np.repeat(np.repeat(tiles, bh, axis=1), bw, axis=2)[:, :h, :w]
    elif kind == "sparse":
        values = rng.choice(maxv + 1, size=max(2, min(17, maxv)), replace=False)
        planes = rng.choice(values, size=(3, h, w))
    elif kind == "constant":
        planes = np.full((3, h, w), int(rng.integers(0, maxv + 1)))
    else:
        raise ValueError(kind)
    return HdrImage(w, h, planes.astype(np.uint16), PixelType.INTEGER, bit_depth)


def half_image(rng, w, h, kind="scene") -> HdrImage:
    if kind == "codes":
        # Arbitrary bit patterns, NaN and infinity included.
        planes = rng.integers(0, 65536, (3, h, w)).astype(np.uint16)
    elif kind == "scene":
        mag = np.exp(rng.normal(0.0, 2.0, (3, h, w)))
        planes = half_to_code(mag.astype(np.float16))
    elif kind == "gradient":
        ramp = np.geomspace(0.01, 1000.0, w)[None, :] * np.ones((h, 1))
        vals = np.stack([ramp * float(f) for f in rng.uniform(0.5, 2.0, 3)])
        planes = half_to_code(vals.astype(np.float16))
    elif kind == "constant":
        planes = np.full((3, h, w), int(rng.integers(0, 0x7C00)), dtype=np.uint16)
    else:
        raise ValueError(kind)
    return HdrImage(w, h, np.ascontiguousarray(planes), PixelType.HALF_FLOAT, 16)


def scene_float(rng, w, h, dynamic_range=1e4) -> HdrImage:
    """Smooth HDR scene with highlights, half-float codes."""
    sky = smooth_field(rng, h, w, radius=max(2, w // 16))
    texture = smooth_field(rng, h, w, radius=2)
    field = 0.8 * sky + 0.2 * texture
    # a few bright light sources
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(3):
        cy, cx = rng.integers(0, h), rng.integers(0, w)
        sigma = max(2.0, min(h, w) / 12)
        field = field + 2.5 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))
    lum = 10.0 ** (field / field.max() * np.log10(dynamic_range)) * 0.01
    gains = rng.uniform(0.6, 1.4, 3)
    planes = half_to_code(
        np.stack([lum * g for g in gains]).astype(np.float32).astype(np.float16)
    )
    return HdrImage(w, h, np.ascontiguousarray(planes), PixelType.HALF_FLOAT, 16)


def scene_integer(rng, w, h, bit_depth=12) -> HdrImage:
    maxv = (1 << bit_depth) - 1
    base = smooth_field(rng, h, w, radius=max(2, w // 12))
    detail = smooth_field(rng, h, w, radius=1)
    field = np.clip(0.85 * base + 0.15 * detail, 0, 1)
    gains = rng.uniform(0.7, 1.0, 3)
    planes = np.stack([np.rint(field * maxv * g) for g in gains])
    return HdrImage(
        w, h, planes.astype(np.uint16), PixelType.INTEGER, bit_depth
    )


def corpus_images() -> list[tuple[str, HdrImage]]:
    """The overhead-measurement corpus: real files if HDRPACK_CORPUS is
    set, otherwise six deterministic synthetic scenes."""
    env_dir = os.environ.get("HDRPACK_CORPUS")
    if env_dir:
        images = []
        for path in sorted(Path(env_dir).iterdir()):
            if path.suffix.lower().lstrip(".") in ("pfm", "ppm", "pgm"):
                images.append((path.name, read_image(path)))
        if len(images) >= 4:
            return images
        raise RuntimeError(f"HDRPACK_CORPUS={env_dir} holds fewer than 4 images")
    rng = np.random.default_rng(20240811)
    return [
        ("synth_sky_f", scene_float(rng, 384, 256, dynamic_range=3e4)),
        ("synth_room_f", scene_float(rng, 320, 240, dynamic_range=2e3)),
        ("synth_dusk_f", scene_float(rng, 256, 384, dynamic_range=1e5)),
        ("synth_forest_i", scene_integer(rng, 384, 256, bit_depth=12)),
        ("synth_field_i", scene_integer(rng, 320, 320, bit_depth=12)),
        ("synth_night_i", scene_integer(rng, 256, 256, bit_depth=16)),
    ]


@pytest.fixture(scope="session")
def corpus():
    return corpus_images()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
