"""Evaluation metrics and correlation analytics.

Covers mask IoU, dataset-level fold evaluation (per-class IoU, mIoU over
target classes, foreground-background IoU), mask compactness, anchor
embedding locality, and Pearson correlation with a two-sided p-value from a
hand-rolled regularized incomplete beta function.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels as kernels
from .errors import DegenerateInput, EmptyMask, ShapeMismatch, TooFewAnchors

IGNORE = 255


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two boolean masks.

    Two empty masks agree perfectly and score 1.0.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0
    inter = int(np.logical_and(a, b).sum())
    return inter / union


def macro_mean(values: list[float]) -> float:
    """Unweighted mean, the rule used to aggregate per-fold scores."""
    if not values:
        raise DegenerateInput("macro mean of an empty list")
    return sum(values) / len(values)


def format_score(value: float) -> str:
    """One-decimal display string, rounding halves away from zero.

    The value is taken at its binary-float precision, so 52.25 prints as
    52.3 while 59.45 (stored slightly below the half) prints as 59.4.
    """
    import decimal

    d = decimal.Decimal(value).quantize(
        decimal.Decimal("0.1"), rounding=decimal.ROUND_HALF_UP
    )
    return str(d)


@dataclass
class EvalReport:
    """Dataset-level scores for one fold plus run provenance."""

    dataset: str
    fold: int
    scheme: str
    target_ids: tuple[int, ...]
    per_class_iou: dict[int, float]
    miou: float
    fb_iou: float
    n_images: int
    config_hash: str = ""
    fusion_rule: str = ""
    seed: int = 0
    source: str = "prediction"

    def to_json_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "fold": self.fold,
            "scheme": self.scheme,
            "target_ids": list(self.target_ids),
            "per_class_iou": {str(k): v for k, v in self.per_class_iou.items()},
            "miou": self.miou,
            "fb_iou": self.fb_iou,
            "n_images": self.n_images,
            "config_hash": self.config_hash,
            "fusion_rule": self.fusion_rule,
            "seed": self.seed,
            "source": self.source,
        }


def evaluate_fold(
    pairs: list[tuple[np.ndarray, np.ndarray]],
    dataset: str,
    fold: int,
    scheme: str,
    target_ids: tuple[int, ...],
    ignore: int = IGNORE,
) -> EvalReport:
    """Score predictions against ground truth over a whole fold.

    Intersections and unions accumulate across all images before division,
    so sparse classes are not dominated by images where they are absent.
    mIoU averages the target (held-out) classes; FBIoU averages the binary
    IoUs of the target-foreground and its complement.
    """
    if not pairs:
        raise DegenerateInput("evaluate_fold needs at least one image")
    if not target_ids:
        raise DegenerateInput("evaluate_fold needs target classes")
    inter = {c: 0 for c in target_ids}
    union = {c: 0 for c in target_ids}
    fg_inter = fg_union = bg_inter = bg_union = 0
    for pred, gt in pairs:
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeMismatch(f"pred {pred.shape} vs gt {gt.shape}")
        valid = gt != ignore
        for c in target_ids:
            p = (pred == c) & valid
            g = (gt == c) & valid
            inter[c] += int((p & g).sum())
            union[c] += int((p | g).sum())
        pf = np.isin(pred, target_ids) & valid
        gf = np.isin(gt, target_ids) & valid
        fg_inter += int((pf & gf).sum())
        fg_union += int((pf | gf).sum())
        pb = ~np.isin(pred, target_ids) & valid
        gb = ~np.isin(gt, target_ids) & valid
        bg_inter += int((pb & gb).sum())
        bg_union += int((pb | gb).sum())

    per_class = {
        c: (inter[c] / union[c] if union[c] > 0 else 1.0) for c in target_ids
    }
    miou = macro_mean(list(per_class.values()))
    fg_iou = fg_inter / fg_union if fg_union > 0 else 1.0
    bg_iou = bg_inter / bg_union if bg_union > 0 else 1.0
    return EvalReport(
        dataset=dataset,
        fold=fold,
        scheme=scheme,
        target_ids=tuple(target_ids),
        per_class_iou=per_class,
        miou=miou,
        fb_iou=(fg_iou + bg_iou) / 2.0,
        n_images=len(pairs),
    )


def compactness(mask: np.ndarray) -> float:
    """Isoperimetric compactness 4*pi*A / P^2 of a boolean mask.

    P is the crack-edge perimeter: the number of unit edges between a mask
    pixel and a non-mask (or out-of-bounds) pixel under 4-connectivity. A
    disk approaches pi/4 under this pixel-grid perimeter.
    """
    m = np.ascontiguousarray(np.asarray(mask, dtype=bool), dtype=np.uint8)
    if m.ndim != 2:
        raise ShapeMismatch(f"mask must be 2-D, got {m.shape}")
    area = int(m.sum())
    if area == 0:
        raise EmptyMask("compactness of an empty mask")
    perimeter = kernels.crack_perimeter(m)
    return 4.0 * math.pi * area / float(perimeter) ** 2


def embedding_locality(embeddings: np.ndarray, index: int) -> float:
    """Spread ratio of one anchor's distances to all other anchors.

    Returns mean distance divided by the population standard deviation of
    those distances. Needs at least three anchors; identical distances give
    a zero deviation and are rejected as degenerate.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise ShapeMismatch(f"expected (K, D) embeddings, got {emb.shape}")
    k = emb.shape[0]
    if k < 3:
        raise TooFewAnchors(f"locality needs at least 3 anchors, got {k}")
    if not 0 <= index < k:
        raise IndexError(f"anchor index {index} out of range for {k}")
    others = np.delete(np.arange(k), index)
    dists = np.linalg.norm(emb[others] - emb[index], axis=1)
    std = float(dists.std())
    if std == 0.0:
        raise DegenerateInput("all anchor distances identical")
    return float(dists.mean()) / std


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta, modified Lentz iteration.
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 301):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            return h
    raise DegenerateInput(f"incomplete beta did not converge for ({a}, {b}, {x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued-fraction expansion."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Pearson r and its two-sided p-value under the t distribution.

    The p-value comes from the regularized incomplete beta with
    degrees of freedom n - 2; perfectly correlated inputs return p = 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeMismatch(f"need matching 1-D arrays, got {x.shape}, {y.shape}")
    n = x.size
    if n < 3:
        raise DegenerateInput(f"pearson needs at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("pearson of a constant sequence")
    r = float((dx * dy).sum()) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    one_minus_r2 = (1.0 - r) * (1.0 + r)
    if one_minus_r2 <= 0.0:
        return r, 0.0
    t2 = r * r * df / one_minus_r2
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t2))
    return r, p


@dataclass
class CorrelationStats:
    """Per-class quantity paired with per-class IoU, plus their correlation."""

    kind: str
    class_ids: tuple[int, ...]
    values: tuple[float, ...]
    ious: tuple[float, ...]
    r: float
    p: float
    config_hash: str = ""
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "class_ids": list(self.class_ids),
            "values": list(self.values),
            "ious": list(self.ious),
            "r": self.r,
            "p": self.p,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }


def correlate_with_iou(
    kind: str, per_class_value: dict[int, float], per_class_iou: dict[int, float]
) -> CorrelationStats:
    """Pair a per-class statistic with per-class IoU and correlate them."""
    common = sorted(set(per_class_value) & set(per_class_iou))
    if len(common) < 3:
        raise DegenerateInput(
            f"need at least 3 classes with both values, got {len(common)}"
        )
    values = np.array([per_class_value[c] for c in common])
    ious = np.array([per_class_iou[c] for c in common])
    r, p = pearson(values, ious)
    return CorrelationStats(
        kind=kind,
        class_ids=tuple(common),
        values=tuple(float(v) for v in values),
        ious=tuple(float(v) for v in ious),
        r=r,
        p=p,
    )


def shape_statistics(
    masks_by_class: dict[int, list[np.ndarray]],
    per_class_iou: dict[int, float],
) -> CorrelationStats:
    """Correlate mean mask compactness per class with per-class IoU."""
    mean_compact: dict[int, float] = {}
    for c, masks in masks_by_class.items():
        scores = [compactness(m) for m in masks if np.asarray(m).any()]
        if scores:
            mean_compact[c] = float(np.mean(scores))
    return correlate_with_iou("compactness", mean_compact, per_class_iou)


def locality_statistics(
    embeddings: np.ndarray,
    class_ids: list[int],
    per_class_iou: dict[int, float],
) -> CorrelationStats:
    """Correlate anchor embedding locality per class with per-class IoU."""
    if len(class_ids) != np.asarray(embeddings).shape[0]:
        raise ShapeMismatch("one class id per embedding row required")
    locality = {
        c: embedding_locality(embeddings, i) for i, c in enumerate(class_ids)
    }
    return correlate_with_iou("locality", locality, per_class_iou)


def write_report_json(path: Path, report: EvalReport | CorrelationStats) -> None:
    path = Path(path)
    path.write_text(
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def write_eval_csv(path: Path, report: EvalReport) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "iou"])
        for c in report.target_ids:
            writer.writerow([c, f"{report.per_class_iou[c]:.6f}"])
        writer.writerow(["miou", f"{report.miou:.6f}"])
        writer.writerow(["fb_iou", f"{report.fb_iou:.6f}"])


def write_stats_csv(path: Path, stats: CorrelationStats) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", stats.kind, "iou"])
        for c, v, i in zip(stats.class_ids, stats.values, stats.ious):
            writer.writerow([c, f"{v:.6f}", f"{i:.6f}"])
        writer.writerow(["pearson_r", f"{stats.r:.6f}", ""])
        writer.writerow(["p_value", f"{stats.p:.6g}", ""])
