"""Readers and writers for flow fields, masks and sequence manifests.

Flow files use the Middlebury ``.flo`` layout (little-endian): float32 magic
202021.25, int32 width, int32 height, then interleaved float32 ``(u, v)``
pairs in row-major order.

Masks are 8-bit binary PGM rasters with the header ``P5 <w> <h> 255\\n``
followed by one byte per pixel, 0 for background and 255 for foreground.

A manifest is a text file with one frame per line::

    # index  flow            [mask]
    1        flow_00001.flo  mask_00001.pgm

Entry ``t`` holds the flow from frame ``t`` back to frame ``t - 1``.  Relative
paths resolve against the manifest's directory.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    BadPixelValue,
    DimensionMismatch,
    FormatError,
    IoFailure,
    NonFiniteValues,
    NonMonotoneIndices,
    NonPositiveDims,
    ParseError,
    TruncatedFile,
)
from .model import FlowField, ForegroundMask

PathLike = Union[str, os.PathLike]

FLO_MAGIC = np.float32(202021.25)
_FLO_HEADER = np.dtype([("magic", "<f4"), ("width", "<i4"), ("height", "<i4")])
_PGM_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


def _read_bytes(path: PathLike) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _write_bytes(path: PathLike, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _parse_flo_header(buf: bytes, path: PathLike) -> tuple[int, int]:
    if len(buf) < 4:
        raise TruncatedFile(f"{path}: file too short for a .flo header")
    if np.frombuffer(buf[:4], "<f4")[0] != FLO_MAGIC:
        raise BadMagic(f"{path}: bad .flo magic")
    if len(buf) < _FLO_HEADER.itemsize:
        raise TruncatedFile(f"{path}: file too short for a .flo header")
    header = np.frombuffer(buf[:_FLO_HEADER.itemsize], _FLO_HEADER)[0]
    width, height = int(header["width"]), int(header["height"])
    if width <= 0 or height <= 0:
        raise NonPositiveDims(f"{path}: non-positive size {width}x{height}")
    return width, height


def read_flow(path: PathLike) -> FlowField:
    buf = _read_bytes(path)
    width, height = _parse_flo_header(buf, path)
    n = width * height * 2
    payload = buf[_FLO_HEADER.itemsize:]
    if len(payload) < 4 * n:
        raise TruncatedFile(f"{path}: expected {4 * n} payload bytes, found {len(payload)}")
    if len(payload) > 4 * n:
        raise FormatError(f"{path}: {len(payload) - 4 * n} trailing bytes after flow payload")
    data = np.frombuffer(payload, "<f4").reshape(height, width, 2)
    if not np.isfinite(data).all():
        raise NonFiniteValues(f"{path}: flow contains NaN or Inf")
    return FlowField(data[..., 0], data[..., 1])


def flow_bytes(field: FlowField) -> bytes:
    """Serialized ``.flo`` content; values are stored as float32."""
    header = np.array([(FLO_MAGIC, field.width, field.height)], _FLO_HEADER)
    data = np.empty((field.height, field.width, 2), "<f4")
    data[..., 0] = field.u
    data[..., 1] = field.v
    return header.tobytes() + data.tobytes()


def write_flow(field: FlowField, path: PathLike) -> None:
    _write_bytes(path, flow_bytes(field))


def read_flow_size(path: PathLike) -> tuple[int, int]:
    """``(width, height)`` from a ``.flo`` header, checking the payload length."""
    try:
        size = os.path.getsize(path)
        with open(path, "rb") as fh:
            head = fh.read(_FLO_HEADER.itemsize)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    width, height = _parse_flo_header(head, path)
    if size != _FLO_HEADER.itemsize + 8 * width * height:
        raise TruncatedFile(f"{path}: size {size} does not match a {width}x{height} flow")
    return width, height


def _parse_pgm_header(buf: bytes, path: PathLike) -> tuple[int, int, int]:
    match = _PGM_HEADER.match(buf)
    if match is None:
        raise BadHeader(f"{path}: expected 'P5 <width> <height> 255' header")
    width, height, maxval = (int(g) for g in match.groups())
    if maxval != 255:
        raise BadHeader(f"{path}: max value must be 255, got {maxval}")
    if width <= 0 or height <= 0:
        raise BadHeader(f"{path}: non-positive size {width}x{height}")
    return width, height, match.end()


def read_mask(path: PathLike) -> ForegroundMask:
    buf = _read_bytes(path)
    width, height, start = _parse_pgm_header(buf, path)
    payload = np.frombuffer(buf, np.uint8, offset=start)
    if payload.size < width * height:
        raise TruncatedFile(f"{path}: expected {width * height} pixels, found {payload.size}")
    if payload.size > width * height:
        raise FormatError(f"{path}: trailing bytes after mask payload")
    bad = (payload != 0) & (payload != 255)
    if bad.any():
        raise BadPixelValue(f"{path}: pixel value {int(payload[bad][0])} is neither 0 nor 255")
    return ForegroundMask(payload.reshape(height, width) == 255)


def mask_bytes(mask: ForegroundMask) -> bytes:
    header = b"P5 %d %d 255\n" % (mask.width, mask.height)
    return header + (mask.bits.astype(np.uint8) * 255).tobytes()


def write_mask(mask: ForegroundMask, path: PathLike) -> None:
    _write_bytes(path, mask_bytes(mask))


def read_mask_size(path: PathLike) -> tuple[int, int]:
    try:
        with open(path, "rb") as fh:
            head = fh.read(64)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    width, height, _ = _parse_pgm_header(head, path)
    return width, height


# -- manifests -------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    index: int
    flow_path: Path
    mask_path: Optional[Path] = None


@dataclass(frozen=True)
class SequenceManifest:
    entries: tuple
    width: Optional[int] = None
    height: Optional[int] = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def has_ground_truth(self) -> bool:
        return bool(self.entries) and all(e.mask_path is not None for e in self.entries)


def load_manifest(path: PathLike) -> SequenceManifest:
    """Parse and validate a manifest.

    Every referenced file must exist and all of them must share one size;
    both are checked eagerly by reading file headers.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    entries: list[ManifestEntry] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"{path}:{lineno}: expected 'index flow [mask]', got {raw!r}")
        try:
            index = int(parts[0])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: bad frame index {parts[0]!r}") from None
        if entries and index <= entries[-1].index:
            raise NonMonotoneIndices(f"{path}:{lineno}: index {index} after {entries[-1].index}")
        flow = base / parts[1]
        mask = base / parts[2] if len(parts) == 3 else None
        for p in (flow, mask):
            if p is not None and not p.is_file():
                raise ParseError(f"{path}:{lineno}: missing file {p}")
        entries.append(ManifestEntry(index, flow, mask))

    size = None
    for e in entries:
        sizes = [read_flow_size(e.flow_path)]
        if e.mask_path is not None:
            sizes.append(read_mask_size(e.mask_path))
        for s in sizes:
            if size is None:
                size = s
            elif s != size:
                raise DimensionMismatch(f"frame {e.index}: size {s[0]}x{s[1]} differs from {size[0]}x{size[1]}")
    width, height = size if size else (None, None)
    return SequenceManifest(tuple(entries), width, height)


def write_manifest(entries: Iterable[ManifestEntry], path: PathLike) -> None:
    """Write a manifest; paths are stored relative to its directory."""
    path = Path(path)
    lines = ["# index flow [mask]"]
    for e in entries:
        cols = [str(e.index), os.path.relpath(e.flow_path, path.parent)]
        if e.mask_path is not None:
            cols.append(os.path.relpath(e.mask_path, path.parent))
        lines.append(" ".join(cols))
    _write_bytes(path, ("\n".join(lines) + "\n").encode())
