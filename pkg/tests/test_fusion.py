"""Eigensegment fusion rules and trace serialization."""

import numpy as np
import pytest

from spectraseg.errors import ShapeMismatch
from spectraseg.fusion import (
    FUSION_RULE_VERSION,
    FusionTrace,
    fuse_predictions,
    read_traces,
    write_traces,
)
from spectraseg.metrics import iou


def _canvas(h, w):
    return np.zeros((h, w), dtype=np.int32)


def test_exact_segment_replaces_region():
    pred = _canvas(8, 8)
    pred[1:4, 1:4] = 5  # ragged 3x3 prediction of a 4x4 object
    pred[1, 1] = 0
    segment = np.zeros((8, 8), bool)
    segment[1:5, 1:5] = True
    fused, traces = fuse_predictions(pred, [segment], tau=0.5)
    expected = _canvas(8, 8)
    expected[1:5, 1:5] = 5
    assert np.array_equal(fused, expected)
    assert traces == [FusionTrace(5, 0, iou(pred == 5, segment), "replaced")]


def test_tau_threshold_boundary():
    pred = _canvas(6, 6)
    pred[0:3, 0:4] = 2  # 12 px prediction
    segment = np.zeros((6, 6), bool)
    segment[0:3, 0:3] = True  # 9 px overlap, union 12 -> IoU 0.75
    assert iou(pred == 2, segment) == 0.75

    fused, traces = fuse_predictions(pred, [segment], tau=0.5)
    assert np.array_equal(fused == 2, segment)
    assert traces[0].action == "replaced" and traces[0].best_iou == 0.75

    fused, traces = fuse_predictions(pred, [segment], tau=0.75)
    assert np.array_equal(fused == 2, segment)  # ties meet the threshold

    fused, traces = fuse_predictions(pred, [segment], tau=0.8)
    assert np.array_equal(fused, pred)
    assert traces == [FusionTrace(2, None, 0.75, "kept")]


def test_tau_above_one_keeps_everything():
    rng = np.random.default_rng(0)
    pred = rng.integers(0, 4, (10, 10)).astype(np.int32)
    segments = [rng.random((10, 10)) < 0.4 for _ in range(3)]
    fused, traces = fuse_predictions(pred, segments, tau=2.0)
    assert np.array_equal(fused, pred)
    assert all(t.action == "kept" and t.segment_index is None for t in traces)


def test_background_and_unclaimed_pixels():
    pred = _canvas(6, 6)
    pred[0:2, 0:2] = 1
    pred[4:6, 4:6] = 3
    seg1 = np.zeros((6, 6), bool)
    seg1[0:2, 0:3] = True
    fused, traces = fuse_predictions(pred, [seg1], tau=0.5, background_id=0)
    # class 1 replaced by seg1; class 3 kept; everything else background
    assert np.array_equal(fused == 1, seg1)
    assert np.array_equal(fused == 3, pred == 3)
    assert set(np.unique(fused)) == {0, 1, 3}
    by_class = {t.class_id: t for t in traces}
    assert by_class[1].action == "replaced"
    assert by_class[3].action == "kept"
    # background never gets a trace
    assert 0 not in by_class


def test_overlap_resolution_order():
    # classes written largest region first, so the smaller class wins overlaps
    pred = _canvas(6, 10)
    pred[:, 0:6] = 1  # 36 px
    pred[:, 6:10] = 2  # 24 px
    seg_big = np.zeros((6, 10), bool)
    seg_big[:, 0:6] = True
    seg_small = np.zeros((6, 10), bool)
    seg_small[:, 4:10] = True  # overlaps seg_big in columns 4:6
    fused, traces = fuse_predictions(pred, [seg_big, seg_small], tau=0.3)
    assert np.all(fused[:, 4:6] == 2)  # later (smaller) class overwrote
    assert np.all(fused[:, 0:4] == 1)
    assert np.all(fused[:, 6:10] == 2)

    # equal region sizes: lower class id writes first, higher id wins overlap
    pred = _canvas(4, 8)
    pred[:, 0:4] = 7
    pred[:, 4:8] = 3
    seg7 = np.zeros((4, 8), bool)
    seg7[:, 0:5] = True
    seg3 = np.zeros((4, 8), bool)
    seg3[:, 3:8] = True
    fused, _ = fuse_predictions(pred, [seg3, seg7], tau=0.3)
    assert np.all(fused[:, 3:5] == 7)  # 7 written after 3 despite same size
    assert np.all(fused[:, 0:3] == 7) and np.all(fused[:, 5:8] == 3)


def test_segment_tie_prefers_lower_index():
    pred = _canvas(6, 6)
    pred[2:4, 2:4] = 9
    seg = np.zeros((6, 6), bool)
    seg[2:4, 2:4] = True
    fused, traces = fuse_predictions(pred, [seg.copy(), seg.copy()], tau=0.5)
    assert traces[0].segment_index == 0
    assert traces[0].best_iou == 1.0


def test_empty_segment_list_and_validation():
    pred = _canvas(5, 5)
    pred[1:3, 1:3] = 4
    fused, traces = fuse_predictions(pred, [], tau=0.5)
    assert np.array_equal(fused, pred)
    assert traces == [FusionTrace(4, None, 0.0, "kept")]

    with pytest.raises(ShapeMismatch):
        fuse_predictions(pred, [np.zeros((4, 4), bool)], tau=0.5)
    with pytest.raises(ValueError):
        fuse_predictions(np.zeros((2, 2, 2), np.int32), [], tau=0.5)
    with pytest.raises(ValueError):
        fuse_predictions(pred, [], tau=-0.1)


def test_fusion_improves_miou_against_gt_segments():
    rng = np.random.default_rng(1)
    gt = _canvas(24, 24)
    gt[2:10, 2:10] = 1
    gt[14:22, 4:12] = 2
    gt[4:12, 14:22] = 3
    # corrupt: erode each class with random dropout
    pred = gt.copy()
    drop = rng.random(gt.shape) < 0.3
    pred[drop & (gt > 0)] = 0
    segments = [gt == c for c in (1, 2, 3)]
    fused, traces = fuse_predictions(pred, segments, tau=0.5)
    raw = np.mean([iou(pred == c, gt == c) for c in (1, 2, 3)])
    new = np.mean([iou(fused == c, gt == c) for c in (1, 2, 3)])
    assert new == 1.0 and new > raw
    assert all(t.action == "replaced" for t in traces)


def test_trace_round_trip(tmp_path):
    traces = [
        FusionTrace(1, 0, 0.8125, "replaced"),
        FusionTrace(2, None, 0.25, "kept"),
    ]
    path = tmp_path / "trace.jsonl"
    write_traces(path, traces)
    text = path.read_text()
    assert text.count("\n") == 2 and text.endswith("\n")
    assert read_traces(path) == traces
    assert FUSION_RULE_VERSION == "per-class-max-iou-v1"
