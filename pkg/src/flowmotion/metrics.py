"""Region-similarity (Jaccard) scores for mask sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptySequence
from .model import ForegroundMask

RECALL_IOU = 0.5


@dataclass(frozen=True)
class SequenceScore:
    per_frame_iou: tuple
    j_mean: float
    j_recall: float
    j_decay: float


def iou(pred: ForegroundMask, gt: ForegroundMask) -> float:
    """Jaccard index of two masks; two empty masks score 1.0."""
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"mask shapes differ: {pred.shape} vs {gt.shape}")
    union = np.count_nonzero(pred.bits | gt.bits)
    if union == 0:
        return 1.0
    return np.count_nonzero(pred.bits & gt.bits) / union


def decay(values: Sequence[float]) -> float:
    """Mean of the first quarter of frames minus mean of the last quarter.

    Quarters hold ``ceil(n / 4)`` frames, so a single frame decays by 0.
    """
    q = max(1, math.ceil(len(values) / 4))
    return float(np.mean(values[:q]) - np.mean(values[-q:]))


def score_ious(ious: Sequence[float]) -> SequenceScore:
    if not len(ious):
        raise EmptySequence("cannot score an empty sequence")
    arr = np.asarray(ious, dtype=np.float64)
    return SequenceScore(
        per_frame_iou=tuple(float(x) for x in arr),
        j_mean=float(arr.mean()),
        j_recall=float(np.mean(arr > RECALL_IOU)),
        j_decay=decay(arr),
    )


def score_sequence(preds: Sequence[ForegroundMask], gts: Sequence[ForegroundMask]) -> SequenceScore:
    if len(preds) != len(gts):
        raise DimensionMismatch(f"{len(preds)} predictions for {len(gts)} ground-truth frames")
    if not preds:
        raise EmptySequence("cannot score an empty sequence")
    return score_ious([iou(p, g) for p, g in zip(preds, gts)])
