"""Per-frame motion detection.

One call to :func:`detect_frame` takes the mixed flow between frames ``t``
and ``t - k``, fits the background model on grid samples, thresholds the
per-pixel residual and proposes the interval ``k`` for the next frame.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .model import FlowField, FlowModel, ForegroundMask
from .sampling import GridConfig, RansacConfig, cra_fit, mean_flow_norm, sample_points

__all__ = [
    "DetectorConfig",
    "IntervalState",
    "ForegroundMask",
    "FrameResult",
    "update_interval",
    "adaptive_threshold",
    "frame_threshold",
    "extract_mask",
    "detect_frame",
]

MODEL_KINDS = ("quadratic", "linear")
THRESHOLD_KINDS = ("adaptive", "fixed")
INTERVAL_KINDS = ("adaptive", "fixed")
NORMS = ("l2", "l1")


@dataclass(frozen=True)
class DetectorConfig:
    """All tunables of the detector.

    The ``*_kind`` switches select the ablation arms: a linear instead of a
    quadratic background, a fixed instead of an adaptive threshold, and a
    fixed instead of an adaptive frame interval.
    """

    alpha_s: float = 25.0
    alpha_1: float = 2.85
    alpha_2: float = 0.33
    k_min: int = 1
    k_max: int = 5
    grid: GridConfig = field(default_factory=GridConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    model_kind: str = "quadratic"
    threshold_kind: str = "adaptive"
    fixed_threshold: float = 11.1
    interval_kind: str = "adaptive"
    fixed_interval: int = 1
    norm: str = "l2"

    def __post_init__(self) -> None:
        if not self.alpha_s > 0:
            raise ValueError("alpha_s must be > 0")
        if self.alpha_1 < 0 or self.alpha_2 < 0:
            raise ValueError("alpha_1 and alpha_2 must be >= 0")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError(f"need 1 <= k_min <= k_max, got {self.k_min}, {self.k_max}")
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
        if self.threshold_kind not in THRESHOLD_KINDS:
            raise ValueError(f"threshold_kind must be one of {THRESHOLD_KINDS}")
        if self.interval_kind not in INTERVAL_KINDS:
            raise ValueError(f"interval_kind must be one of {INTERVAL_KINDS}")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")
        if self.threshold_kind == "fixed" and not self.fixed_threshold > 0:
            raise ValueError("fixed_threshold must be > 0")
        if self.interval_kind == "fixed" and not self.k_min <= self.fixed_interval <= self.k_max:
            raise ValueError("fixed_interval must lie in [k_min, k_max]")

    def with_seed(self, seed: int) -> "DetectorConfig":
        return replace(self, ransac=replace(self.ransac, seed=seed))


@dataclass(frozen=True)
class IntervalState:
    k: int = 1
    last_mean_norm: Optional[float] = None


@dataclass(frozen=True, eq=False)
class FrameResult:
    mask: ForegroundMask
    model: FlowModel
    threshold_used: float
    mean_background_norm: float
    inlier_ratio: float
    k: int
    next_k: int
    n_samples: int
    timings_ms: dict = field(default_factory=dict)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def update_interval(state: IntervalState, mean_norm: float, cfg: DetectorConfig) -> int:
    """Next frame interval: scale ``k`` so the background flow norm tracks ``alpha_s``.

    The result is rounded to whole frames and clamped to ``[k_min, k_max]``.
    A zero norm means the camera is effectively still, so the interval
    jumps straight to ``k_max``.
    """
    if cfg.interval_kind == "fixed":
        return cfg.fixed_interval
    if mean_norm <= 0:
        return cfg.k_max
    raw = cfg.alpha_s * state.k / mean_norm
    if raw >= cfg.k_max:
        return cfg.k_max
    return max(cfg.k_min, min(cfg.k_max, _round_half_up(raw)))


def adaptive_threshold(mean_norm: float, cfg: DetectorConfig) -> float:
    return cfg.alpha_1 + cfg.alpha_2 * mean_norm


def frame_threshold(mean_norm: float, cfg: DetectorConfig) -> float:
    if cfg.threshold_kind == "fixed":
        return cfg.fixed_threshold
    return adaptive_threshold(mean_norm, cfg)


def residual_magnitude(field: FlowField, model: FlowModel, norm: str = "l2") -> np.ndarray:
    """Per-pixel length of observed minus modelled flow."""
    # in place on the freshly evaluated planes; np.hypot is ~3x slower here
    du, dv = model.evaluate_grid(field.width, field.height)
    np.subtract(field.u, du, out=du)
    np.subtract(field.v, dv, out=dv)
    if norm == "l1":
        np.abs(du, out=du)
        np.abs(dv, out=dv)
        du += dv
        return du
    du *= du
    dv *= dv
    du += dv
    return np.sqrt(du, out=du)


def extract_mask(field: FlowField, model: FlowModel, T_a: float, norm: str = "l2") -> ForegroundMask:
    """Mark pixels whose residual flow is strictly longer than ``T_a``."""
    if not T_a > 0:
        raise ValueError(f"threshold must be > 0, got {T_a}")
    return ForegroundMask(residual_magnitude(field, model, norm) > T_a)


def detect_frame(field: FlowField, state: IntervalState, cfg: DetectorConfig,
                 rng: Optional[np.random.Generator] = None) -> tuple[FrameResult, IntervalState]:
    """Run sampling, robust fitting and thresholding on one flow field.

    ``field`` must be the flow from frame ``t`` to frame ``t - state.k``.
    Fit failures (:class:`~flowmotion.errors.FitError`) propagate; the state
    is only advanced on success.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.ransac.seed)
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    samples = sample_points(field, cfg.grid, rng)
    timings["sampling"] = (time.perf_counter() - t0) * 1e3

    fit = cra_fit(samples, cfg.ransac, (field.width, field.height), rng, cfg.model_kind, timings)
    # inliers are the best available estimate of which samples are background
    background = fit.inliers if fit.inliers else samples
    mean_norm = mean_flow_norm(background)
    threshold = frame_threshold(mean_norm, cfg)

    t0 = time.perf_counter()
    mask = extract_mask(field, fit.model, threshold, cfg.norm)
    timings["mask"] = (time.perf_counter() - t0) * 1e3

    next_k = update_interval(state, mean_norm, cfg)
    result = FrameResult(
        mask=mask,
        model=fit.model,
        threshold_used=threshold,
        mean_background_norm=mean_norm,
        inlier_ratio=fit.inlier_ratio,
        k=state.k,
        next_k=next_k,
        n_samples=len(samples),
        timings_ms=timings,
    )
    return result, IntervalState(next_k, mean_norm)

