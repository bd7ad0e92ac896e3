"""Batch pipeline: runs the processing stages over a manifest.

Stages communicate through files in the output directory, named by the
zero-padded record index plus the record stem, so reruns with identical
inputs and configuration produce byte-identical artifacts. Per-record
failures are collected rather than aborting the batch; stage-level
failures are recorded under the pseudo-record ``*``.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .align import AnchorSet, align_loss, compute_logits, predict_labels
from .arrayio import read_npy, read_pgm, write_npy, write_pgm
from .boundary import bce_loss, mask_to_edges, shape_loss, total_loss
from .errors import (
    ManifestError,
    ShapeMismatch,
    SpectrasegError,
    StageDependencyError,
)
from .folds import FoldSpec, class_names, fold_classes
from .fusion import FUSION_RULE_VERSION, fuse_predictions, write_traces
from .manifest import Manifest, ManifestRecord, load_manifest
from .metrics import (
    evaluate_fold,
    locality_statistics,
    shape_statistics,
    write_eval_csv,
    write_report_json,
    write_stats_csv,
)
from .params import RunConfig
from .spectral import decompose_image

logger = logging.getLogger(__name__)

STAGES = ("predict", "segments", "fuse", "eval", "analyze", "loss")
IGNORE = 255


@dataclass(frozen=True)
class StageError:
    """One recoverable failure; the batch continues past it."""

    record: str
    stage: str
    error: str

    def to_json_dict(self) -> dict:
        return {"record": self.record, "stage": self.stage, "error": self.error}


@dataclass
class PipelineContext:
    manifest: Manifest
    config: RunConfig
    fold_spec: FoldSpec | None
    anchors: AnchorSet | None
    class_ids: tuple[int, ...] | None
    out_dir: Path
    background_id: int


@dataclass
class PipelineResult:
    stages_run: tuple[str, ...]
    errors: list[StageError]

    @property
    def ok(self) -> bool:
        return not self.errors


def build_context(
    manifest_path: str | Path,
    config: RunConfig,
    dataset: str | None = None,
    fold: int | None = None,
    scheme: str | None = None,
) -> PipelineContext:
    """Load the manifest and resolve fold/anchor context.

    Explicit arguments override the manifest's directives.
    """
    manifest = load_manifest(manifest_path)
    dataset = dataset if dataset is not None else manifest.dataset
    fold = fold if fold is not None else manifest.fold
    scheme = scheme if scheme is not None else (manifest.scheme or "sequential")
    fold_spec = None
    if dataset is not None and fold is not None:
        fold_spec = fold_classes(dataset, fold, scheme)

    anchors = None
    class_ids = manifest.class_ids
    if manifest.anchors_path is not None:
        emb = read_npy(manifest.anchors_path)
        if class_ids is None:
            raise ManifestError(
                f"{manifest.path}: anchors directive requires class_ids"
            )
        if emb.ndim != 2 or emb.shape[0] != len(class_ids):
            raise ManifestError(
                f"{manifest.path}: anchor rows {emb.shape} do not match "
                f"{len(class_ids)} class ids"
            )
        if manifest.class_names is not None:
            names = manifest.class_names
        elif dataset is not None:
            table = class_names(dataset)
            names = tuple(
                table[c - 1] if 1 <= c <= len(table) else f"class_{c}"
                for c in class_ids
            )
        else:
            names = tuple(f"class_{c}" for c in class_ids)
        anchors = AnchorSet(names=names, embeddings=emb)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return PipelineContext(
        manifest=manifest,
        config=config,
        fold_spec=fold_spec,
        anchors=anchors,
        class_ids=class_ids,
        out_dir=out_dir,
        background_id=manifest.background_id,
    )


def _artifact(ctx: PipelineContext, index: int, record: ManifestRecord, kind: str) -> Path:
    return ctx.out_dir / f"{index:04d}_{record.name}.{kind}"


def _require(value, what: str):
    if value is None:
        raise StageDependencyError(f"missing {what}")
    return value


def _run_records(
    ctx: PipelineContext,
    stage: str,
    fn: Callable[[int, ManifestRecord], object],
) -> tuple[list[object], list[StageError]]:
    """Apply fn to every record, in manifest order, collecting failures.

    Records are independent, so thread count changes speed only; results
    are reduced in manifest order either way.
    """

    def safe(job: tuple[int, ManifestRecord]) -> object:
        index, record = job
        try:
            return fn(index, record)
        except (SpectrasegError, ValueError, OSError) as exc:
            logger.info("%s failed on %s: %s", stage, record.name, exc)
            return StageError(record.name, stage, f"{type(exc).__name__}: {exc}")

    jobs = list(enumerate(ctx.manifest.records))
    if ctx.config.workers > 1:
        with ThreadPoolExecutor(max_workers=ctx.config.workers) as pool:
            results = list(pool.map(safe, jobs))
    else:
        results = [safe(job) for job in jobs]
    errors = [r for r in results if isinstance(r, StageError)]
    values = [r for r in results if not isinstance(r, StageError)]
    return values, errors


def stage_predict(ctx: PipelineContext) -> list[StageError]:
    """Argmax classification of vision-language features against anchors."""
    anchors = _require(ctx.anchors, "anchors directive (predict stage)")
    class_ids = _require(ctx.class_ids, "class_ids directive (predict stage)")

    def one(index: int, record: ManifestRecord) -> None:
        feats = read_npy(_require(record.vl_features, "vl_features column"))
        logits = compute_logits(feats, anchors)
        pred = predict_labels(logits, class_ids)
        write_pgm(_artifact(ctx, index, record, "pred.pgm"), pred)

    _, errors = _run_records(ctx, "predict", one)
    return errors


def stage_segments(ctx: PipelineContext) -> list[StageError]:
    """Spectral eigensegment extraction from self-supervised features."""
    hp = ctx.config.hp

    def one(index: int, record: ManifestRecord) -> None:
        feats = read_npy(_require(record.ssl_features, "ssl_features column"))
        image = None
        if hp.lambda_affinity > 0.0:
            image = read_npy(_require(record.image, "image column"))
        segs, dropped, _ = decompose_image(
            feats, image, hp, method="auto", seed=ctx.config.seed
        )
        if segs:
            stack = np.stack([s.astype(np.uint8) for s in segs])
        else:
            stack = np.zeros((0,) + feats.shape[:2], dtype=np.uint8)
        write_npy(_artifact(ctx, index, record, "segments.npy"), stack)
        if dropped:
            logger.debug("%s: dropped eigenvectors %s", record.name, dropped)

    _, errors = _run_records(ctx, "segments", one)
    return errors


def _nn_resize(mask: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    sh, sw = mask.shape
    rows = (np.arange(h) * sh) // h
    cols = (np.arange(w) * sw) // w
    return mask[rows][:, cols]


def stage_fuse(ctx: PipelineContext) -> list[StageError]:
    """Replace predicted regions with matching eigensegments."""
    hp = ctx.config.hp

    def one(index: int, record: ManifestRecord) -> None:
        pred_path = _artifact(ctx, index, record, "pred.pgm")
        seg_path = _artifact(ctx, index, record, "segments.npy")
        if not pred_path.is_file():
            raise StageDependencyError(f"missing {pred_path.name}; run predict")
        if not seg_path.is_file():
            raise StageDependencyError(f"missing {seg_path.name}; run segments")
        pred = read_pgm(pred_path)
        stack = read_npy(seg_path)
        segments = [
            _nn_resize(stack[i].astype(bool), pred.shape)
            for i in range(stack.shape[0])
        ]
        fused, traces = fuse_predictions(
            pred, segments, tau=hp.tau_fuse, background_id=ctx.background_id
        )
        write_pgm(_artifact(ctx, index, record, "fused.pgm"), fused)
        write_traces(_artifact(ctx, index, record, "trace.jsonl"), traces)

    _, errors = _run_records(ctx, "fuse", one)
    return errors


def _target_ids(ctx: PipelineContext) -> tuple[int, ...]:
    if ctx.fold_spec is not None:
        return ctx.fold_spec.unseen
    if ctx.class_ids is not None:
        targets = tuple(
            sorted(c for c in ctx.class_ids if c != ctx.background_id)
        )
        if targets:
            return targets
    raise StageDependencyError(
        "evaluation needs a dataset+fold or a class_ids directive"
    )


def stage_eval(ctx: PipelineContext) -> list[StageError]:
    """Dataset-level scoring of fused (preferred) or raw predictions."""
    targets = _target_ids(ctx)

    def one(index: int, record: ManifestRecord) -> tuple[np.ndarray, np.ndarray, bool]:
        gt = read_pgm(_require(record.gt, "gt column"))
        fused_path = _artifact(ctx, index, record, "fused.pgm")
        pred_path = _artifact(ctx, index, record, "pred.pgm")
        if fused_path.is_file():
            pred, used_fused = read_pgm(fused_path), True
        elif pred_path.is_file():
            pred, used_fused = read_pgm(pred_path), False
        else:
            raise StageDependencyError(
                f"missing {fused_path.name} and {pred_path.name}; "
                "run predict (and fuse) first"
            )
        if pred.shape != gt.shape:
            raise ShapeMismatch(f"pred {pred.shape} vs gt {gt.shape}")
        return pred, gt, used_fused

    values, errors = _run_records(ctx, "eval", one)
    if not values:
        errors.append(StageError("*", "eval", "no scorable records"))
        return errors
    pairs = [(pred, gt) for pred, gt, _ in values]
    fused_flags = [flag for _, _, flag in values]
    try:
        report = evaluate_fold(
            pairs,
            dataset=ctx.fold_spec.dataset if ctx.fold_spec else "custom",
            fold=ctx.fold_spec.fold if ctx.fold_spec else -1,
            scheme=ctx.fold_spec.scheme if ctx.fold_spec else "none",
            target_ids=targets,
        )
    except (SpectrasegError, ValueError) as exc:
        errors.append(StageError("*", "eval", f"{type(exc).__name__}: {exc}"))
        return errors
    report.config_hash = ctx.config.config_hash()
    report.fusion_rule = FUSION_RULE_VERSION
    report.seed = ctx.config.seed
    if all(fused_flags):
        report.source = "fused"
    elif not any(fused_flags):
        report.source = "prediction"
    else:
        report.source = "mixed"
    write_report_json(ctx.out_dir / "eval.json", report)
    write_eval_csv(ctx.out_dir / "eval.csv", report)
    return errors


def stage_analyze(ctx: PipelineContext) -> list[StageError]:
    """Correlate mask compactness and anchor locality with per-class IoU."""
    eval_path = ctx.out_dir / "eval.json"
    if not eval_path.is_file():
        return [StageError("*", "analyze", "missing eval.json; run eval first")]
    eval_doc = json.loads(eval_path.read_text(encoding="utf-8"))
    per_class_iou = {int(k): float(v) for k, v in eval_doc["per_class_iou"].items()}

    def one(index: int, record: ManifestRecord) -> np.ndarray:
        return read_pgm(_require(record.gt, "gt column"))

    values, errors = _run_records(ctx, "analyze", one)
    masks_by_class: dict[int, list[np.ndarray]] = {c: [] for c in per_class_iou}
    for gt in values:
        for c in per_class_iou:
            mask = gt == c
            if mask.any():
                masks_by_class[c].append(mask)
    try:
        shape_stats = shape_statistics(masks_by_class, per_class_iou)
        shape_stats.config_hash = ctx.config.config_hash()
        shape_stats.seed = ctx.config.seed
        write_report_json(ctx.out_dir / "shape_stats.json", shape_stats)
        write_stats_csv(ctx.out_dir / "shape_stats.csv", shape_stats)
    except (SpectrasegError, ValueError) as exc:
        errors.append(StageError("*", "analyze", f"{type(exc).__name__}: {exc}"))
    if ctx.anchors is not None and ctx.class_ids is not None:
        try:
            loc_stats = locality_statistics(
                ctx.anchors.embeddings.astype(np.float64),
                list(ctx.class_ids),
                per_class_iou,
            )
            loc_stats.config_hash = ctx.config.config_hash()
            loc_stats.seed = ctx.config.seed
            write_report_json(ctx.out_dir / "locality_stats.json", loc_stats)
            write_stats_csv(ctx.out_dir / "locality_stats.csv", loc_stats)
        except (SpectrasegError, ValueError) as exc:
            errors.append(StageError("*", "analyze", f"{type(exc).__name__}: {exc}"))
    return errors


def stage_loss(ctx: PipelineContext) -> list[StageError]:
    """Per-record alignment, shape and BCE losses on held-in classes."""
    anchors = _require(ctx.anchors, "anchors directive (loss stage)")
    class_ids = _require(ctx.class_ids, "class_ids directive (loss stage)")
    hp = ctx.config.hp
    seen = ctx.fold_spec.seen if ctx.fold_spec is not None else None

    def one(index: int, record: ManifestRecord) -> dict:
        feats = read_npy(_require(record.vl_features, "vl_features column"))
        gt = read_pgm(_require(record.gt, "gt column"))
        boundary = read_npy(_require(record.boundary, "boundary column"))
        logits = compute_logits(feats, anchors)
        a = align_loss(logits, gt, class_ids, seen=seen)
        gt_edges = mask_to_edges(gt)
        s = shape_loss(boundary, gt_edges)
        b = bce_loss(boundary, gt_edges)
        t = total_loss(a, s, b, hp)
        return {
            "record": record.name,
            "align": a,
            "shape": s,
            "bce": b,
            "total": t,
        }

    rows, errors = _run_records(ctx, "loss", one)
    doc = {
        "rows": rows,
        "mean_align": float(np.mean([r["align"] for r in rows])) if rows else None,
        "mean_shape": float(np.mean([r["shape"] for r in rows])) if rows else None,
        "mean_bce": float(np.mean([r["bce"] for r in rows])) if rows else None,
        "mean_total": float(np.mean([r["total"] for r in rows])) if rows else None,
        "lambda1": hp.lambda1,
        "lambda2": hp.lambda2,
        "config_hash": ctx.config.config_hash(),
        "seed": ctx.config.seed,
    }
    (ctx.out_dir / "loss.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (ctx.out_dir / "loss.csv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("record,align,shape,bce,total\n")
        for r in rows:
            fh.write(
                f"{r['record']},{r['align']:.6f},{r['shape']:.6f},"
                f"{r['bce']:.6f},{r['total']:.6f}\n"
            )
    return errors


_STAGE_FNS = {
    "predict": stage_predict,
    "segments": stage_segments,
    "fuse": stage_fuse,
    "eval": stage_eval,
    "analyze": stage_analyze,
    "loss": stage_loss,
}


def run_pipeline(ctx: PipelineContext, stages: list[str]) -> PipelineResult:
    """Run the requested stages in canonical order and record failures."""
    for stage in stages:
        if stage not in _STAGE_FNS:
            raise ValueError(f"unknown stage {stage!r}; choose from {STAGES}")
    ordered = [s for s in STAGES if s in set(stages)]
    errors: list[StageError] = []
    for stage in ordered:
        logger.info("running stage %s on %d records", stage, len(ctx.manifest.records))
        errors.extend(_STAGE_FNS[stage](ctx))
    (ctx.out_dir / "errors.json").write_text(
        json.dumps([e.to_json_dict() for e in errors], indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    return PipelineResult(stages_run=tuple(ordered), errors=errors)
