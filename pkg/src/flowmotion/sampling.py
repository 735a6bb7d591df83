"""Grid-constrained sampling and the constrained RANSAC background fit.

The image is tiled into square pieces, a fraction of the pieces is chosen at
random and one pixel is drawn inside each chosen piece.  RANSAC then runs a
fixed number of hypothesize-and-verify rounds over that sparse sample set.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DegenerateModel, EmptyInput, EmptySelection, InsufficientSamples
from .model import (
    FlowField,
    FlowModel,
    LinearFlowModel,
    NormTransform,
    PixelCoord,
    QuadraticFlowModel,
    SamplePoint,
    linear_design,
    quadratic_design,
    sample_arrays,
)
from .regression import RANK_RTOL, fit_arrays, residuals

__all__ = [
    "GridConfig",
    "RansacConfig",
    "Rect",
    "SamplePoint",
    "CraResult",
    "grid_partition",
    "selected_piece_count",
    "sample_points",
    "cra_search",
    "cra_fit",
    "mean_flow_norm",
]


@dataclass(frozen=True)
class GridConfig:
    piece_edge: int = 100
    sample_fraction: float = 0.5

    def __post_init__(self) -> None:
        if int(self.piece_edge) != self.piece_edge or self.piece_edge < 1:
            raise ValueError(f"piece_edge must be a positive integer, got {self.piece_edge}")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError(f"sample_fraction must be in (0, 1], got {self.sample_fraction}")


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 50
    inlier_threshold: float = 1.5
    seed: int = 0
    # fixed by the model: 6 for quadratic, 3 for the linear ablation
    min_points: int = field(default=6, init=False)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not self.inlier_threshold > 0:
            raise ValueError(f"inlier_threshold must be > 0, got {self.inlier_threshold}")


class Rect(NamedTuple):
    x: int
    y: int
    width: int
    height: int


@dataclass(frozen=True, eq=False)
class CraResult:
    model: FlowModel
    inliers: list
    inlier_ratio: float
    inlier_mask: np.ndarray
    hypotheses_valid: int = 0


def grid_partition(width: int, height: int, S: int) -> list[Rect]:
    """Tile the image with ``S``-sized square pieces, row-major.

    Pieces on the right and bottom edges are clipped to the image.
    """
    if width < 1 or height < 1 or S < 1:
        raise ValueError("width, height and S must all be >= 1")
    return [
        Rect(x0, y0, min(S, width - x0), min(S, height - y0))
        for y0 in range(0, height, S)
        for x0 in range(0, width, S)
    ]


def selected_piece_count(n_pieces: int, fraction: float) -> int:
    # round half up; the epsilon absorbs products like 0.1 * 45 = 4.4999...
    return int(math.floor(fraction * n_pieces + 0.5 + 1e-9))


def sample_points(field: FlowField, cfg: GridConfig, rng: np.random.Generator) -> list[SamplePoint]:
    """Draw one uniformly random pixel from each of a random subset of pieces."""
    pieces = grid_partition(field.width, field.height, cfg.piece_edge)
    n_pick = selected_piece_count(len(pieces), cfg.sample_fraction)
    if n_pick == 0:
        raise EmptySelection(
            f"sample_fraction={cfg.sample_fraction} selects no piece out of {len(pieces)}"
        )
    chosen = np.sort(rng.choice(len(pieces), size=n_pick, replace=False))
    rects = np.array([pieces[i] for i in chosen])
    xs = rects[:, 0] + rng.integers(0, rects[:, 2])
    ys = rects[:, 1] + rng.integers(0, rects[:, 3])
    us = field.u[ys, xs]
    vs = field.v[ys, xs]
    return [
        SamplePoint(PixelCoord(int(x), int(y)), (float(u), float(v)))
        for x, y, u, v in zip(xs, ys, us, vs)
    ]


def _model_class(kind: str):
    if kind == "quadratic":
        return QuadraticFlowModel, quadratic_design
    if kind == "linear":
        return LinearFlowModel, linear_design
    raise ValueError(f"unknown model kind {kind!r}")


def cra_search(x: np.ndarray, y: np.ndarray, flow: np.ndarray, cfg: RansacConfig,
               norm: NormTransform, rng: np.random.Generator,
               kind: str = "quadratic") -> tuple[np.ndarray, int]:
    """Run the hypothesize-and-verify rounds.

    Returns the inlier mask of the best hypothesis (first one wins ties) and
    the number of non-singular hypotheses.  All minimal subsets are drawn up
    front so the result depends only on the generator state, never on
    evaluation order.
    """
    cls, design = _model_class(kind)
    m = cls.n_terms
    n = len(x)
    if n < m:
        raise InsufficientSamples(f"need at least {m} samples for a {kind} hypothesis, got {n}")

    A = design(*norm.apply(x, y))
    subsets = np.argsort(rng.random((cfg.iterations, n)), axis=1)[:, :m]
    As = A[subsets]
    Bs = flow[subsets]

    U, s, Vt = np.linalg.svd(As)
    valid = s[:, -1] > RANK_RTOL * s[:, 0]
    if not valid.any():
        raise DegenerateModel(f"all {cfg.iterations} minimal subsets were singular")
    # zero out singular hypotheses instead of dividing by ~0; they are masked below
    inv_s = np.where(valid[:, None], 1.0 / np.where(s > 0, s, 1.0), 0.0)
    coef = np.swapaxes(Vt, 1, 2) @ ((np.swapaxes(U, 1, 2) @ Bs) * inv_s[:, :, None])

    pred = A @ coef  # (iterations, n, 2)
    res = np.hypot(pred[..., 0] - flow[:, 0], pred[..., 1] - flow[:, 1])
    inl = res <= cfg.inlier_threshold
    counts = np.where(valid, inl.sum(axis=1), -1)
    best = int(np.argmax(counts))
    return inl[best], int(valid.sum())


def cra_fit(samples: Sequence[SamplePoint], cfg: RansacConfig,
            domain: Optional[tuple[int, int]] = None,
            rng: Optional[np.random.Generator] = None,
            kind: str = "quadratic", timings: Optional[dict] = None) -> CraResult:
    """Robust background fit: RANSAC consensus followed by a least-squares refit.

    ``domain`` is the ``(width, height)`` of the source image and fixes the
    coordinate normalization; it defaults to the samples' bounding extent.
    When ``rng`` is omitted a generator seeded from ``cfg.seed`` is used.

    The reported inliers are re-verified against the refit model, so every
    one of them is within ``cfg.inlier_threshold`` of it.  If ``timings``
    is given, the consensus search and refit durations (ms) are stored
    under ``"cra"`` and ``"lsre"``.
    """
    x, y, flow = sample_arrays(samples)
    if domain is None:
        domain = (int(x.max()) + 1, int(y.max()) + 1) if len(x) else (1, 1)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    norm = NormTransform.for_domain(*domain)

    t0 = time.perf_counter()
    consensus, n_valid = cra_search(x, y, flow, cfg, norm, rng, kind)
    t1 = time.perf_counter()
    model = fit_arrays(x[consensus], y[consensus], flow[consensus], norm, kind)
    if timings is not None:
        timings["cra"] = (t1 - t0) * 1e3
        timings["lsre"] = (time.perf_counter() - t1) * 1e3
    mask = residuals(model, x, y, flow) <= cfg.inlier_threshold
    inliers = [s for s, keep in zip(samples, mask) if keep]
    return CraResult(model, inliers, len(inliers) / len(samples), mask, n_valid)


def mean_flow_norm(points: Sequence[SamplePoint]) -> float:
    """Mean Euclidean length of the points' flow vectors."""
    if not len(points):
        raise EmptyInput("mean_flow_norm of an empty point set")
    flow = np.array([p.flow for p in points], dtype=np.float64)
    return float(np.mean(np.hypot(flow[:, 0], flow[:, 1])))
