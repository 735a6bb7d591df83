"""Command-line interface: ``flowmotion {detect,eval,synth,bench}``.

Exit status is 0 on success, 1 for bad input (unreadable or malformed files,
bad arguments, fit failures that cannot be recovered) and 2 for anything
unexpected.
"""

from __future__ import annotations

import argparse
import os
import re
import shutil
import statistics
import sys
import tempfile
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import synth
from .config import config_items, load_config
from .detector import DetectorConfig, IntervalState, detect_frame
from .errors import EmptySequence, FlowMotionError, MissingFrame
from .io import ManifestEntry, load_manifest, read_flow, read_mask, write_flow, write_manifest, write_mask
from .metrics import SequenceScore, score_sequence
from .pipeline import FrameRecord, ManifestSource, run_sequence

STAGES = ("sampling", "cra", "lsre", "mask")
_INDEXED = re.compile(r"_(\d+)\.pgm$")


def mask_name(index: int) -> str:
    return f"mask_{index:05d}.pgm"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, bool):
        return str(int(value))
    return str(value)


def _resolve_config(config: Optional[os.PathLike], seed: Optional[int]) -> DetectorConfig:
    cfg = load_config(config) if config else DetectorConfig()
    return cfg.with_seed(seed) if seed is not None else cfg


# -- detect ----------------------------------------------------------------

def format_report(cfg: DetectorConfig, records: list[FrameRecord], score: Optional[SequenceScore]) -> str:
    """Report as ``key=value`` lines: a header block, one block per frame, an optional score block."""
    lines = ["# flowmotion detect report"]
    lines += [f"config.{k}={_fmt(v)}" for k, v in config_items(cfg)]
    lines.append(f"frames={len(records)}")
    lines.append(f"fallback_frames={sum(r.fallback for r in records)}")
    lines.append(f"composed_frames={sum(r.composed for r in records)}")
    for r in records:
        lines.append("")
        lines.append(f"frame={r.index}")
        lines.append(f"k={r.k_used}")
        lines.append(f"k_requested={r.k_requested}")
        lines.append(f"composed={_fmt(r.composed)}")
        lines.append(f"fallback={_fmt(r.fallback)}")
        lines.append(f"threshold_used={_fmt(r.threshold_used)}")
        lines.append(f"mean_background_norm={_fmt(r.mean_background_norm)}")
        lines.append(f"inlier_ratio={_fmt(r.inlier_ratio)}")
        lines.append(f"next_k={r.next_k}")
        lines.append(f"foreground_pixels={r.mask.count()}")
        if r.error:
            lines.append(f"error={r.error}")
        for stage in STAGES:
            if stage in r.timings_ms:
                lines.append(f"time_{stage}_ms={r.timings_ms[stage]:.3f}")
    if score is not None:
        lines.append("")
        lines += _score_lines(score)
    return "\n".join(lines) + "\n"


def _score_lines(score: SequenceScore) -> list[str]:
    return [
        f"frames_scored={len(score.per_frame_iou)}",
        f"j_mean={_fmt(score.j_mean)}",
        f"j_recall={_fmt(score.j_recall)}",
        f"j_decay={_fmt(score.j_decay)}",
    ]


def _prepare_out(out: Path) -> None:
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise FlowMotionError(f"output directory {out} exists and is not empty")
    out.parent.mkdir(parents=True, exist_ok=True)


def _publish(tmp: Path, out: Path) -> None:
    if out.exists():
        out.rmdir()
    os.replace(tmp, out)


def cmd_detect(manifest, out, config=None, seed: Optional[int] = None):
    """Detect masks for every manifest frame; returns ``(records, score)``.

    Everything is written to a scratch directory first and moved into place
    only on success.
    """
    cfg = _resolve_config(config, seed)
    out = Path(out)
    _prepare_out(out)
    man = load_manifest(manifest)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        source = ManifestSource(man, cfg.k_max)
        records = run_sequence(source, cfg)
        score = None
        if man.has_ground_truth:
            gts = [source.ground_truth(t) for t in range(len(source))]
            score = score_sequence([r.mask for r in records], gts)
        for r in records:
            write_mask(r.mask, tmp / mask_name(r.index))
        (tmp / "report.txt").write_text(format_report(cfg, records, score))
        _publish(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return records, score


# -- eval ------------------------------------------------------------------

def _indexed_masks(directory: Path) -> dict[int, Path]:
    found = {}
    for p in sorted(directory.iterdir()):
        m = _INDEXED.search(p.name)
        if m and p.is_file():
            found[int(m.group(1))] = p
    return found


def cmd_eval(pred_dir, gt_dir=None, manifest=None, out=None) -> SequenceScore:
    """Score predicted masks against ground truth from a directory or manifest.

    Files are matched on the trailing frame number (``*_00012.pgm``).  Every
    ground-truth frame needs a prediction.
    """
    pred_dir = Path(pred_dir)
    if not pred_dir.is_dir():
        raise MissingFrame(f"prediction directory {pred_dir} does not exist")
    if manifest is not None:
        gt_paths = {e.index: e.mask_path for e in load_manifest(manifest).entries if e.mask_path is not None}
    elif gt_dir is not None:
        gt_paths = _indexed_masks(Path(gt_dir))
    else:
        raise FlowMotionError("eval needs --gt or --manifest")
    if not gt_paths:
        raise EmptySequence("no ground-truth masks found")
    preds = _indexed_masks(pred_dir)
    missing = sorted(set(gt_paths) - set(preds))
    if missing:
        raise MissingFrame(f"no prediction for frame(s) {missing[:10]}")
    order = sorted(gt_paths)
    score = score_sequence([read_mask(preds[i]) for i in order], [read_mask(gt_paths[i]) for i in order])
    text = "\n".join(_score_lines(score)) + "\n"
    sys.stdout.write(text)
    target = Path(out) if out is not None else pred_dir / "eval.txt"
    target.write_text(text)
    return score


# -- synth -----------------------------------------------------------------

def _write_sequence(sequence, directory: Path) -> None:
    entries = []
    for t, spec in enumerate(sequence):
        index = t + 1
        field, gt = synth.generate(spec)
        flow_path = directory / f"flow_{index:05d}.flo"
        gt_path = directory / f"gt_{index:05d}.pgm"
        write_flow(field, flow_path)
        write_mask(gt.mask, gt_path)
        entries.append(ManifestEntry(index, flow_path, gt_path))
    write_manifest(entries, directory / "manifest.txt")


def cmd_synth(preset: str, out, seed: int = 0) -> list[Path]:
    """Write a preset's flows, ground-truth masks and manifest(s) under ``out``."""
    suite = synth.benchmark_suite(preset, seed)
    out = Path(out)
    _prepare_out(out)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        dirs = [tmp] if len(suite) == 1 else [tmp / f"seq_{i:03d}" for i in range(len(suite))]
        for d, sequence in zip(dirs, suite):
            d.mkdir(exist_ok=True)
            _write_sequence(sequence, d)
        _publish(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if len(suite) == 1:
        return [out / "manifest.txt"]
    return [out / f"seq_{i:03d}" / "manifest.txt" for i in range(len(suite))]


# -- bench -----------------------------------------------------------------

def cmd_bench(manifest, config=None, reps: int = 5, seed: Optional[int] = None) -> dict[str, float]:
    """Median per-stage wall time (ms) over all frames and repetitions.

    Flow files are read once up front, so file I/O is excluded.  Each frame
    is processed at interval 1 exactly as listed in the manifest.
    """
    if reps < 1:
        raise FlowMotionError("--reps must be >= 1")
    cfg = _resolve_config(config, seed)
    man = load_manifest(manifest)
    if not len(man):
        raise EmptySequence("manifest lists no frames")
    fields = [read_flow(e.flow_path) for e in man.entries]
    samples: dict[str, list[float]] = {s: [] for s in STAGES + ("total",)}
    for rep in range(reps):
        for t, fld in enumerate(fields):
            rng = np.random.default_rng([cfg.ransac.seed, t])
            t0 = time.perf_counter()
            result, _ = detect_frame(fld, IntervalState(1), cfg, rng)
            total = (time.perf_counter() - t0) * 1e3
            for s in STAGES:
                samples[s].append(result.timings_ms[s])
            samples["total"].append(total)
    medians = {s: statistics.median(v) for s, v in samples.items()}
    width, height = man.width, man.height
    print(f"{'stage':<10} median_ms")
    for s, v in medians.items():
        print(f"{s:<10} {v:9.3f}")
    print(f"frames={len(fields)} reps={reps} width={width} height={height}")
    return medians


# -- entry point -----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flowmotion", description="Optical-flow motion detection for moving cameras.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="detect foreground masks for a flow sequence")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted masks")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--gt", help="directory of ground-truth masks")
    group.add_argument("--manifest", help="manifest listing ground-truth masks")
    p.add_argument("--out", help="report file (default: <pred>/eval.txt)")

    p = sub.add_parser("synth", help="write a synthetic benchmark sequence")
    p.add_argument("--preset", required=True, help=f"one of: {', '.join(synth.PRESETS)}")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="time the per-frame pipeline stages")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "detect":
            records, score = cmd_detect(args.manifest, args.out, args.config, args.seed)
            print(f"frames={len(records)} fallback_frames={sum(r.fallback for r in records)} out={args.out}")
            if score is not None:
                print("\n".join(_score_lines(score)))
        elif args.command == "eval":
            cmd_eval(args.pred, args.gt, args.manifest, args.out)
        elif args.command == "synth":
            for path in cmd_synth(args.preset, args.out, args.seed):
                print(path)
        elif args.command == "bench":
            cmd_bench(args.manifest, args.config, args.reps, args.seed)
    except (FlowMotionError, OSError) as exc:
        print(f"flowmotion {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"flowmotion {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
