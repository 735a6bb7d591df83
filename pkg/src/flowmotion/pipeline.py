"""Sequence-level driver around :func:`~flowmotion.detector.detect_frame`.

Frames are processed in order because each one proposes the interval for
the next.  Flow comes from a *source*: either synthetic scenes, which can
render the flow over any interval directly, or a manifest of single-step
flow files, where longer intervals are approximated by summing the most
recent fields (no warping, so occlusions and large motions are not
handled).  Frames whose flow had to be composed are flagged.

When a background fit fails the previous frame's model and threshold are
reused and the frame is flagged as a fallback.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import synth
from .detector import DetectorConfig, FrameResult, IntervalState, detect_frame, extract_mask
from .errors import FitError
from .io import SequenceManifest, read_flow, read_mask
from .model import FlowField, FlowModel, ForegroundMask


class SynthSource:
    """Flow rendered from a synthetic sequence at whatever interval is asked for."""

    def __init__(self, sequence: Sequence[synth.SceneSpec], first_index: int = 1):
        self.sequence = list(sequence)
        self.first_index = first_index

    def __len__(self) -> int:
        return len(self.sequence)

    def frame_index(self, t: int) -> int:
        return self.first_index + t

    def flow(self, t: int, k: int) -> tuple[FlowField, int, bool]:
        k_used = synth.available_interval(t, k)
        field, _ = synth.generate(synth.interval_spec(self.sequence, t, k_used))
        return field, k_used, False

    def ground_truth(self, t: int) -> Optional[ForegroundMask]:
        return synth.ground_truth_mask(self.sequence[t])


class ManifestSource:
    """Single-step flow files; interval-k flow is the sum of the last k fields."""

    def __init__(self, manifest: SequenceManifest, max_interval: int = 5):
        self.manifest = manifest
        self._cache: deque = deque(maxlen=max_interval)

    def __len__(self) -> int:
        return len(self.manifest.entries)

    def frame_index(self, t: int) -> int:
        return self.manifest.entries[t].index

    def _field(self, t: int) -> FlowField:
        for pos, fld in self._cache:
            if pos == t:
                return fld
        fld = read_flow(self.manifest.entries[t].flow_path)
        self._cache.append((t, fld))
        return fld

    def flow(self, t: int, k: int) -> tuple[FlowField, int, bool]:
        entries = self.manifest.entries
        k_used = 1
        # only consecutive frame indices can be chained
        while k_used < k and t - k_used >= 0 and entries[t - k_used].index == entries[t].index - k_used:
            k_used += 1
        total = self._field(t)
        for j in range(1, k_used):
            total = total + self._field(t - j)
        return total, k_used, k_used > 1

    def ground_truth(self, t: int) -> Optional[ForegroundMask]:
        path = self.manifest.entries[t].mask_path
        return read_mask(path) if path is not None else None


@dataclass
class FrameRecord:
    index: int
    k_requested: int
    k_used: int
    composed: bool
    mask: ForegroundMask
    threshold_used: float
    mean_background_norm: float
    inlier_ratio: float
    next_k: int
    fallback: bool = False
    error: Optional[str] = None
    model: Optional[FlowModel] = None
    timings_ms: dict = field(default_factory=dict)


def initial_state(cfg: DetectorConfig) -> IntervalState:
    return IntervalState(cfg.fixed_interval if cfg.interval_kind == "fixed" else cfg.k_min)


def run_sequence(source, cfg: DetectorConfig) -> list[FrameRecord]:
    """Detect motion in every frame of ``source``.

    Frame ``t`` draws its random numbers from a generator seeded with
    ``(cfg.ransac.seed, t)``, so results do not depend on how many draws
    earlier frames made.
    """
    state = initial_state(cfg)
    prev: Optional[FrameResult] = None
    records = []
    for t in range(len(source)):
        k_req = state.k
        fld, k_used, composed = source.flow(t, k_req)
        rng = np.random.default_rng([cfg.ransac.seed, t])
        try:
            result, state = detect_frame(fld, IntervalState(k_used, state.last_mean_norm), cfg, rng)
        except FitError as exc:
            if prev is not None:
                mask = extract_mask(fld, prev.model, prev.threshold_used, cfg.norm)
                model, threshold, norm = prev.model, prev.threshold_used, prev.mean_background_norm
            else:
                mask = ForegroundMask.empty(fld.width, fld.height)
                model, threshold, norm = None, float("nan"), float("nan")
            records.append(FrameRecord(
                source.frame_index(t), k_req, k_used, composed, mask, threshold, norm,
                0.0, state.k, fallback=True, error=f"{type(exc).__name__}: {exc}", model=model,
            ))
            continue
        prev = result
        records.append(FrameRecord(
            source.frame_index(t), k_req, k_used, composed, result.mask, result.threshold_used,
            result.mean_background_norm, result.inlier_ratio, result.next_k,
            model=result.model, timings_ms=result.timings_ms,
        ))
    return records
