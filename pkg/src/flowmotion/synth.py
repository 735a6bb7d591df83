"""Synthetic flow scenes with known background and ground-truth masks.

Background flow is a quadratic polynomial of the normalized pixel
coordinates (the same model class the detector fits).  Foreground blobs add a
constant flow offset on top of the local background.  Gaussian noise is added
to both components everywhere.

The polynomial is evaluated here term by term, independently of
:mod:`flowmotion.model`, so tests can use this module as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InvalidSpec, UnknownPreset
from .model import FlowField, ForegroundMask

SHAPES = ("rectangle", "ellipse")


@dataclass(frozen=True)
class Blob:
    """Foreground region given by its bounding box ``(x, y, width, height)``."""

    x: int
    y: int
    width: int
    height: int
    relative_flow: tuple[float, float]
    shape: str = "rectangle"

    def mask(self, width: int, height: int) -> np.ndarray:
        out = np.zeros((height, width), dtype=bool)
        if self.shape == "rectangle":
            out[self.y:self.y + self.height, self.x:self.x + self.width] = True
            return out
        yy, xx = np.mgrid[self.y:self.y + self.height, self.x:self.x + self.width]
        cx = self.x + (self.width - 1) / 2.0
        cy = self.y + (self.height - 1) / 2.0
        inside = ((xx - cx) / (self.width / 2.0)) ** 2 + ((yy - cy) / (self.height / 2.0)) ** 2 <= 1.0
        out[self.y:self.y + self.height, self.x:self.x + self.width] = inside
        return out


@dataclass(frozen=True, eq=False)
class SceneSpec:
    width: int
    height: int
    background_H: np.ndarray
    blobs: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "background_H", np.array(self.background_H, dtype=np.float64).reshape(2, 6))
        object.__setattr__(self, "blobs", tuple(self.blobs))


@dataclass(frozen=True, eq=False)
class GroundTruth:
    mask: ForegroundMask
    clean_field: FlowField


def validate(spec: SceneSpec) -> None:
    if spec.width < 1 or spec.height < 1:
        raise InvalidSpec(f"non-positive scene size {spec.width}x{spec.height}")
    if not spec.noise_sigma >= 0:
        raise InvalidSpec(f"noise_sigma must be >= 0, got {spec.noise_sigma}")
    if not np.isfinite(spec.background_H).all():
        raise InvalidSpec("background_H must be finite")
    for b in spec.blobs:
        if b.shape not in SHAPES:
            raise InvalidSpec(f"unknown blob shape {b.shape!r}")
        if b.width < 1 or b.height < 1:
            raise InvalidSpec(f"empty blob {b}")
        if b.x < 0 or b.y < 0 or b.x + b.width > spec.width or b.y + b.height > spec.height:
            raise InvalidSpec(f"blob {b} exceeds the {spec.width}x{spec.height} image")


def normalized_axes(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel centres mapped linearly onto [-1, 1] (0 for a single-pixel axis)."""
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    xn = 2.0 * xs / (width - 1) - 1.0 if width > 1 else np.zeros(1)
    yn = 2.0 * ys / (height - 1) - 1.0 if height > 1 else np.zeros(1)
    return xn, yn


def background_flow(H: np.ndarray, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Analytic background planes for coefficients ``H`` (normalized basis)."""
    xn, yn = normalized_axes(width, height)
    X = xn[None, :]
    Y = yn[:, None]
    planes = []
    for c_xx, c_yy, c_xy, c_x, c_y, c_1 in np.asarray(H, dtype=np.float64).reshape(2, 6):
        plane = c_xx * X * X + c_yy * Y * Y + c_xy * X * Y + c_x * X + c_y * Y + c_1
        planes.append(np.broadcast_to(plane, (height, width)).copy())
    return planes[0], planes[1]


def background_at(H: np.ndarray, width: int, height: int, x: float, y: float) -> tuple[float, float]:
    xn = 2.0 * x / (width - 1) - 1.0 if width > 1 else 0.0
    yn = 2.0 * y / (height - 1) - 1.0 if height > 1 else 0.0
    H = np.asarray(H, dtype=np.float64).reshape(2, 6)
    terms = (xn * xn, yn * yn, xn * yn, xn, yn, 1.0)
    return tuple(float(sum(c * t for c, t in zip(row, terms))) for row in H)


def ground_truth_mask(spec: SceneSpec) -> ForegroundMask:
    fg = np.zeros((spec.height, spec.width), dtype=bool)
    for blob in spec.blobs:
        fg |= blob.mask(spec.width, spec.height)
    return ForegroundMask(fg)


def generate(spec: SceneSpec) -> tuple[FlowField, GroundTruth]:
    """Render the flow field and its ground truth for one scene."""
    validate(spec)
    u, v = background_flow(spec.background_H, spec.width, spec.height)
    fg = np.zeros((spec.height, spec.width), dtype=bool)
    for blob in spec.blobs:
        m = blob.mask(spec.width, spec.height)
        u[m] += blob.relative_flow[0]
        v[m] += blob.relative_flow[1]
        fg |= m
    clean = FlowField(u, v)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        noise = rng.normal(0.0, spec.noise_sigma, size=(2, spec.height, spec.width))
        noisy = FlowField(u + noise[0], v + noise[1])
    else:
        noisy = clean
    return noisy, GroundTruth(ForegroundMask(fg), clean)


# -- sequences -------------------------------------------------------------
#
# A sequence is a list of per-frame specs; entry t describes the flow from
# frame t to frame t-1.  interval_spec() derives the flow over k frames.

def motion_H(width: int, height: int, tx: float = 0.0, ty: float = 0.0, zoom: float = 0.0,
             rot: float = 0.0, px: float = 0.0, py: float = 0.0) -> np.ndarray:
    """Coefficients for small camera motion about the image centre.

    ``tx``/``ty`` translate (pixels), ``zoom`` and ``rot`` are the relative
    scale change and rotation angle, and ``px``/``py`` (1/pixel) add the
    quadratic terms a tilting image plane produces.
    """
    a = (width - 1) / 2.0
    b = (height - 1) / 2.0
    return np.array([
        [px * a * a, 0.0, py * a * b, zoom * a, -rot * b, tx],
        [0.0, py * b * b, px * a * b, rot * a, zoom * b, ty],
    ])


def interval_spec(sequence: Sequence[SceneSpec], t: int, k: int) -> SceneSpec:
    """Scene for the flow from frame ``t`` back to ``t - k``.

    Background coefficients and blob offsets are summed over the ``k``
    single-frame steps; blob geometry is that of frame ``t``.  Noise
    variances add.  ``k`` is capped by the frames available before ``t``.
    """
    k = max(1, min(k, t + 1))
    if k == 1:
        return sequence[t]
    steps = sequence[t - k + 1:t + 1]
    H = sum(s.background_H for s in steps)
    blobs = []
    for j, blob in enumerate(sequence[t].blobs):
        du = sum(s.blobs[j].relative_flow[0] for s in steps)
        dv = sum(s.blobs[j].relative_flow[1] for s in steps)
        blobs.append(replace(blob, relative_flow=(du, dv)))
    sigma = math.sqrt(sum(s.noise_sigma ** 2 for s in steps))
    seed = _seed(sequence[t].seed, k)
    return SceneSpec(sequence[t].width, sequence[t].height, H, tuple(blobs), sigma, seed)


def available_interval(t: int, k: int) -> int:
    return max(1, min(k, t + 1))


# -- presets ---------------------------------------------------------------

WIDTH, HEIGHT = 854, 480
N_FRAMES = 30


def _seed(base: int, t: int) -> int:
    return int(np.random.SeedSequence([base, t]).generate_state(1, np.uint64)[0] >> 1)


def _static(seed: int) -> list[list[SceneSpec]]:
    return [[
        SceneSpec(WIDTH, HEIGHT, np.zeros((2, 6)), (), 0.0, _seed(seed, t))
        for t in range(10)
    ]]


def _panning(t: int, rng_phase: float) -> np.ndarray:
    # mean background norm stays near 22-26 px per frame
    return motion_H(
        WIDTH, HEIGHT,
        tx=20.0 + 2.0 * math.sin(0.3 * t + rng_phase),
        ty=-9.0 + 2.0 * math.cos(0.2 * t + rng_phase),
        zoom=0.01 + 0.004 * math.sin(0.25 * t),
        rot=0.004 * math.cos(0.15 * t),
        px=1.5e-5,
        py=-1.0e-5,
    )


def _single_blob(seed: int) -> list[list[SceneSpec]]:
    phase = np.random.default_rng(seed).uniform(0, 2 * math.pi)
    frames = []
    for t in range(N_FRAMES):
        blob = Blob(300 + 4 * t, 180 + 2 * t, 80, 80, (30.0, 0.0))
        frames.append(SceneSpec(WIDTH, HEIGHT, _panning(t, phase), (blob,), 0.3, _seed(seed, t)))
    return [frames]


def _multi_object(seed: int) -> list[list[SceneSpec]]:
    phase = np.random.default_rng(seed).uniform(0, 2 * math.pi)
    frames = []
    for t in range(N_FRAMES):
        blobs = (
            Blob(60 + 3 * t, 60, 90, 70, (28.0, 10.0)),
            Blob(420, 120 + 3 * t, 60, 120, (-25.0, 20.0), "ellipse"),
            Blob(700 - 4 * t, 330, 100, 60, (0.0, -32.0)),
        )
        frames.append(SceneSpec(WIDTH, HEIGHT, _panning(t, phase), blobs, 0.3, _seed(seed, t)))
    return [frames]


def zoom_speed(t: int) -> float:
    """Relative scale change per frame for frame ``t`` of the zooming preset."""
    return 0.004 + 0.0024 * t


def _zooming(seed: int) -> list[list[SceneSpec]]:
    frames = []
    for t in range(N_FRAMES):
        z = zoom_speed(t)
        H = motion_H(WIDTH, HEIGHT, tx=3.0, ty=-2.0, zoom=z, rot=0.002, px=8e-5 + 6e-4 * z, py=6e-5 + 4e-4 * z)
        # rough mean background norm; object motion and flow noise scale with it
        speed = float(np.mean(np.abs(H[:, 3:5]))) + 3.0
        rel = 8.0 + 0.6 * speed
        blobs = (
            Blob(180 + 3 * t, 150, 110, 90, (rel, 0.0)),
            Blob(560, 260 - 2 * t, 90, 90, (0.0, -rel), "ellipse"),
        )
        frames.append(SceneSpec(WIDTH, HEIGHT, H, blobs, 0.3 + 0.01 * speed, _seed(seed, t)))
    return [frames]


def _slow(seed: int) -> list[list[SceneSpec]]:
    frames = []
    for t in range(N_FRAMES):
        H = motion_H(WIDTH, HEIGHT, tx=4.0, ty=1.5, zoom=0.001, px=2e-6)
        blob = Blob(350 + t, 200, 80, 80, (6.0, 2.0))
        frames.append(SceneSpec(WIDTH, HEIGHT, H, (blob,), 0.3, _seed(seed, t)))
    return [frames]


def _noisy_background(seed: int) -> list[list[SceneSpec]]:
    phase = np.random.default_rng(seed).uniform(0, 2 * math.pi)
    return [[
        SceneSpec(WIDTH, HEIGHT, _panning(t, phase), (), 0.3, _seed(seed, t))
        for t in range(N_FRAMES)
    ]]


def _bench(seed: int) -> list[list[SceneSpec]]:
    return [_single_blob(seed)[0][:5]]


PRESETS = {
    "static": _static,
    "single-blob": _single_blob,
    "multi-object": _multi_object,
    "zooming": _zooming,
    "slow": _slow,
    "noisy-background": _noisy_background,
    "bench": _bench,
}


def benchmark_suite(preset: str, seed: int = 0) -> list[list[SceneSpec]]:
    """Deterministic list of frame sequences for a named preset."""
    try:
        build = PRESETS[preset]
    except KeyError:
        raise UnknownPreset(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}") from None
    return build(seed)
