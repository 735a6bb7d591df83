import os
import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowmotion.errors import (
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
from flowmotion.io import (
    ManifestEntry,
    flow_bytes,
    load_manifest,
    mask_bytes,
    read_flow,
    read_mask,
    write_flow,
    write_manifest,
    write_mask,
)
from flowmotion.model import FlowField, ForegroundMask
from flowmotion.pipeline import ManifestSource

DATA = Path(__file__).parent / "data"


def _flo(width, height, values, magic=202021.25):
    return struct.pack("<fii", magic, width, height) + struct.pack(f"<{len(values)}f", *values)


def test_golden_file():
    raw = (DATA / "golden_1x1.flo").read_bytes()
    assert raw == b"PIEH" + struct.pack("<iiff", 1, 1, 3.0, 4.0)
    f = read_flow(DATA / "golden_1x1.flo")
    assert (f.width, f.height) == (1, 1)
    assert f.flow_at(0, 0) == (3.0, 4.0)
    assert flow_bytes(f) == raw


def test_zero_flow_byte_layout(tmp_path):
    p = tmp_path / "z.flo"
    write_flow(FlowField.zeros(2, 2), p)
    raw = p.read_bytes()
    assert len(raw) == 44
    assert raw[:12] == struct.pack("<fii", 202021.25, 2, 2)
    assert raw[12:] == bytes(32)


def test_interleaved_row_major(tmp_path):
    p = tmp_path / "a.flo"
    # 2x1: pixel (0,0) = (1,2), pixel (1,0) = (3,4)
    p.write_bytes(_flo(2, 1, [1, 2, 3, 4]))
    f = read_flow(p)
    assert f.flow_at(0, 0) == (1.0, 2.0) and f.flow_at(1, 0) == (3.0, 4.0)


def test_round_trip(tmp_path, rng):
    u = rng.normal(0, 10, (13, 17)).astype(np.float32).astype(np.float64)
    v = rng.normal(0, 10, (13, 17)).astype(np.float32).astype(np.float64)
    p = tmp_path / "r.flo"
    write_flow(FlowField(u, v), p)
    back = read_flow(p)
    assert np.array_equal(back.u, u) and np.array_equal(back.v, v)
    q = tmp_path / "r2.flo"
    write_flow(back, q)
    assert q.read_bytes() == p.read_bytes()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_bytes_round_trip_property(w, h, seed):
    rng = np.random.default_rng(seed)
    raw = _flo(w, h, rng.normal(0, 50, 2 * w * h).astype(np.float32).tolist())
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "x.flo"
        p.write_bytes(raw)
        assert flow_bytes(read_flow(p)) == raw


@pytest.mark.parametrize(
    "raw, exc",
    [
        (_flo(1, 1, [0, 0], magic=1.0), BadMagic),
        (b"PIE", TruncatedFile),
        (b"PIEH" + struct.pack("<i", 1), TruncatedFile),
        (_flo(2, 2, [0] * 7), TruncatedFile),
        (_flo(1, 1, [0, 0, 0]), FormatError),
        (_flo(0, 3, []), NonPositiveDims),
        (_flo(-1, 3, []), NonPositiveDims),
        (_flo(1, 1, [float("nan"), 0]), NonFiniteValues),
        (_flo(1, 1, [0, float("inf")]), NonFiniteValues),
    ],
)
def test_bad_flow_files(tmp_path, raw, exc):
    p = tmp_path / "bad.flo"
    p.write_bytes(raw)
    with pytest.raises(exc):
        read_flow(p)


def test_missing_and_unwritable(tmp_path):
    with pytest.raises(IoFailure):
        read_flow(tmp_path / "nope.flo")
    with pytest.raises(IoFailure):
        write_flow(FlowField.zeros(1, 1), tmp_path / "no" / "such" / "dir" / "x.flo")
    assert isinstance(IoFailure("x"), OSError)


def test_mask_round_trip(tmp_path, rng):
    bits = rng.random((9, 14)) < 0.3
    m = ForegroundMask(bits)
    p = tmp_path / "m.pgm"
    write_mask(m, p)
    raw = p.read_bytes()
    assert raw.startswith(b"P5 14 9 255\n")
    assert len(raw) == len(b"P5 14 9 255\n") + 9 * 14
    assert set(raw[len(b"P5 14 9 255\n"):]) <= {0, 255}
    assert read_mask(p) == m
    assert mask_bytes(read_mask(p)) == raw


def test_mask_accepts_other_whitespace(tmp_path):
    p = tmp_path / "m.pgm"
    p.write_bytes(b"P5\n2\t1\n255\n\xff\x00")
    assert read_mask(p).bits.tolist() == [[True, False]]


@pytest.mark.parametrize(
    "raw, exc",
    [
        (b"P5 2 1 255\n\x00\x80", BadPixelValue),
        (b"P6 2 1 255\n\x00\x00", BadHeader),
        (b"P5 2 1 1\n\x00\x00", BadHeader),
        (b"P5 0 1 255\n", BadHeader),
        (b"P5 2 2 255\n\x00\x00", TruncatedFile),
        (b"P5 1 1 255\n\x00\x00", FormatError),
    ],
)
def test_bad_masks(tmp_path, raw, exc):
    p = tmp_path / "m.pgm"
    p.write_bytes(raw)
    with pytest.raises(exc):
        read_mask(p)


def _sequence(tmp_path, n=3, w=6, h=4, masks=True):
    entries = []
    for i in range(1, n + 1):
        f = tmp_path / f"flow_{i}.flo"
        write_flow(FlowField(np.full((h, w), float(i)), np.zeros((h, w))), f)
        m = None
        if masks:
            m = tmp_path / f"gt_{i}.pgm"
            write_mask(ForegroundMask.empty(w, h), m)
        entries.append(ManifestEntry(i, f, m))
    return entries


def test_manifest_round_trip(tmp_path):
    entries = _sequence(tmp_path)
    write_manifest(entries, tmp_path / "manifest.txt")
    text = (tmp_path / "manifest.txt").read_text()
    assert str(tmp_path) not in text
    man = load_manifest(tmp_path / "manifest.txt")
    assert man.entries == tuple(entries)
    assert (man.width, man.height) == (6, 4)
    assert man.has_ground_truth


def test_manifest_comments_and_optional_masks(tmp_path):
    _sequence(tmp_path, masks=False)
    (tmp_path / "m.txt").write_text("# header\n\n1 flow_1.flo   # first\n3\tflow_3.flo\n")
    man = load_manifest(tmp_path / "m.txt")
    assert [e.index for e in man.entries] == [1, 3]
    assert not man.has_ground_truth


@pytest.mark.parametrize(
    "text, exc",
    [
        ("2 flow_2.flo\n1 flow_1.flo\n", NonMonotoneIndices),
        ("1 flow_1.flo\n1 flow_2.flo\n", NonMonotoneIndices),
        ("1 missing.flo\n", ParseError),
        ("x flow_1.flo\n", ParseError),
        ("1\n", ParseError),
        ("1 flow_1.flo gt_1.pgm extra\n", ParseError),
    ],
)
def test_bad_manifests(tmp_path, text, exc):
    _sequence(tmp_path)
    (tmp_path / "m.txt").write_text(text)
    with pytest.raises(exc):
        load_manifest(tmp_path / "m.txt")


def test_manifest_size_mismatch(tmp_path):
    _sequence(tmp_path)
    write_flow(FlowField.zeros(5, 4), tmp_path / "odd.flo")
    (tmp_path / "m.txt").write_text("1 flow_1.flo\n2 odd.flo\n")
    with pytest.raises(DimensionMismatch):
        load_manifest(tmp_path / "m.txt")
    write_mask(ForegroundMask.empty(3, 3), tmp_path / "small.pgm")
    (tmp_path / "m.txt").write_text("1 flow_1.flo small.pgm\n")
    with pytest.raises(DimensionMismatch):
        load_manifest(tmp_path / "m.txt")


def test_missing_manifest(tmp_path):
    with pytest.raises(ParseError):
        load_manifest(tmp_path / "none.txt")


def test_manifest_source_composes_consecutive_fields(tmp_path):
    entries = _sequence(tmp_path, n=4, masks=False)
    os.replace(entries[3].flow_path, tmp_path / "flow_6.flo")
    entries[3] = ManifestEntry(6, tmp_path / "flow_6.flo")
    write_manifest(entries, tmp_path / "m.txt")
    src = ManifestSource(load_manifest(tmp_path / "m.txt"))
    f, k, composed = src.flow(2, 3)  # frames 3, 2, 1
    assert (k, composed) == (3, True)
    assert f.u[0, 0] == 6.0
    f, k, composed = src.flow(3, 3)  # frame 6 has no predecessor at 5
    assert (k, composed) == (1, False)
    assert f.u[0, 0] == 4.0
