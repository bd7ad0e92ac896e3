"""Fusion of eigensegment masks with per-pixel label predictions.

Each foreground class region in the prediction is matched against every
candidate eigensegment by IoU. If the best match is good enough the class
region is replaced by that segment's cleaner support; otherwise the raw
region is kept. Every decision is recorded in a trace for auditability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch
from .metrics import iou

FUSION_RULE_VERSION = "per-class-max-iou-v1"


@dataclass(frozen=True)
class FusionTrace:
    """One per-class fusion decision."""

    class_id: int
    segment_index: int | None
    best_iou: float
    action: str  # "replaced" or "kept"

    def to_json_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "segment_index": self.segment_index,
            "best_iou": self.best_iou,
            "action": self.action,
        }


def fuse_predictions(
    pred: np.ndarray,
    segments: list[np.ndarray],
    tau: float = 0.5,
    background_id: int = 0,
) -> tuple[np.ndarray, list[FusionTrace]]:
    """Replace predicted class regions with well-matching eigensegments.

    Classes are processed from the largest predicted region to the
    smallest (ties on ascending class id), each writing its pixels into an
    initially all-background canvas, so a smaller class processed later can
    reclaim pixels from a larger overlapping segment. For each class the
    best segment by IoU wins (ties on the lower segment index) and replaces
    the region only when that IoU reaches tau.
    """
    pred = np.asarray(pred)
    if pred.ndim != 2:
        raise ShapeMismatch(f"prediction must be 2-D, got {pred.shape}")
    for seg in segments:
        if np.asarray(seg).shape != pred.shape:
            raise ShapeMismatch(
                f"segment shape {np.asarray(seg).shape} != prediction {pred.shape}"
            )
    if not 0.0 <= tau:
        raise ValueError(f"tau must be non-negative, got {tau}")

    classes = [int(c) for c in np.unique(pred) if c != background_id]
    sizes = {c: int((pred == c).sum()) for c in classes}
    order = sorted(classes, key=lambda c: (-sizes[c], c))

    fused = np.full(pred.shape, background_id, dtype=np.int32)
    traces: list[FusionTrace] = []
    for c in order:
        region = pred == c
        best_iou = -1.0
        best_idx: int | None = None
        for idx, seg in enumerate(segments):
            score = iou(region, np.asarray(seg, dtype=bool))
            if score > best_iou:
                best_iou = score
                best_idx = idx
        if best_idx is not None and best_iou >= tau:
            fused[np.asarray(segments[best_idx], dtype=bool)] = c
            traces.append(FusionTrace(c, best_idx, best_iou, "replaced"))
        else:
            fused[region] = c
            traces.append(FusionTrace(c, None, max(best_iou, 0.0), "kept"))
    return fused, traces


def write_traces(path: Path, traces: list[FusionTrace]) -> None:
    """Serialize traces as one JSON object per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace.to_json_dict(), sort_keys=True) + "\n")


def read_traces(path: Path) -> list[FusionTrace]:
    traces = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        traces.append(
            FusionTrace(
                class_id=int(obj["class_id"]),
                segment_index=(
                    None
                    if obj["segment_index"] is None
                    else int(obj["segment_index"])
                ),
                best_iou=float(obj["best_iou"]),
                action=str(obj["action"]),
            )
        )
    return traces
