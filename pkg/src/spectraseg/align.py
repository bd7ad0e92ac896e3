"""Pixel-wise classification against text anchors.

A feature map (H, W, D) is scored against K anchor embeddings by cosine
similarity; the alignment loss is the softmax cross entropy of those scores
over the seen classes, summed across pixels. All reductions accumulate in
float64 regardless of the input precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, LabelOutOfFold, ZeroAnchor

IGNORE = 255


@dataclass(frozen=True)
class AnchorSet:
    """Named text-anchor embeddings: one (D,) row per category."""

    names: tuple[str, ...]
    embeddings: np.ndarray  # (K, D) float32

    def __post_init__(self) -> None:
        emb = np.asarray(self.embeddings, dtype=np.float32)
        if emb.ndim != 2 or emb.shape[0] < 1:
            raise ValueError(f"embeddings must be (K, D) with K >= 1, got {emb.shape}")
        if len(self.names) != emb.shape[0]:
            raise ValueError(
                f"{len(self.names)} names for {emb.shape[0]} embedding rows"
            )
        if not np.isfinite(emb).all():
            raise ValueError("anchor embeddings must be finite")
        if (np.linalg.norm(emb.astype(np.float64), axis=1) == 0.0).any():
            raise ZeroAnchor("every anchor row needs a nonzero Euclidean norm")
        object.__setattr__(self, "embeddings", emb)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def __len__(self) -> int:
        return self.embeddings.shape[0]


def compute_logits(features: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    """Cosine similarity of every pixel feature to every anchor.

    Zero-norm pixel features (padding) score 0 against every anchor rather
    than raising.

    Args:
        features: (H, W, D) float feature map.
        anchors: anchor set with matching dimension D.

    Returns:
        (H, W, K) float32 scores in [-1, 1].
    """
    features = np.asarray(features)
    if features.ndim != 3:
        raise DimMismatch(f"features must be (H, W, D), got {features.shape}")
    if features.shape[2] != anchors.dim:
        raise DimMismatch(
            f"feature dim {features.shape[2]} != anchor dim {anchors.dim}"
        )
    feats = features.astype(np.float64).reshape(-1, anchors.dim)
    norms = np.linalg.norm(feats, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = feats / safe[:, None]
    unit[norms == 0.0] = 0.0
    emb = anchors.embeddings.astype(np.float64)
    emb = emb / np.linalg.norm(emb, axis=1)[:, None]
    scores = unit @ emb.T
    h, w = features.shape[:2]
    return scores.reshape(h, w, len(anchors)).astype(np.float32)


def _seen_channels(
    class_ids: list[int] | tuple[int, ...], seen: list[int] | tuple[int, ...] | None
) -> np.ndarray:
    if seen is None:
        return np.arange(len(class_ids))
    seen_set = set(seen)
    channels = np.array([k for k, c in enumerate(class_ids) if c in seen_set])
    if channels.size == 0:
        raise LabelOutOfFold("no logit channel corresponds to a seen class")
    return channels


def _gt_channel_map(
    gt: np.ndarray, class_ids: list[int] | tuple[int, ...], channels: np.ndarray,
    ignore: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Map labels to channel indices; raise on labels outside the seen set."""
    id_to_channel = {class_ids[k]: k for k in channels}
    valid = gt != ignore
    labels = np.unique(gt[valid])
    bad = [int(c) for c in labels if int(c) not in id_to_channel]
    if bad:
        raise LabelOutOfFold(f"ground-truth labels {bad} are not in the seen set")
    lut = np.full(int(gt.max(initial=0)) + 1, -1, dtype=np.int64)
    for cid, ch in id_to_channel.items():
        if cid < lut.size:
            lut[cid] = ch
    gt_channels = np.where(valid, lut[np.clip(gt, 0, lut.size - 1)], -1)
    return gt_channels, valid


def align_loss(
    logits: np.ndarray,
    gt: np.ndarray,
    class_ids: list[int] | tuple[int, ...],
    seen: list[int] | tuple[int, ...] | None = None,
    ignore: int = IGNORE,
    temperature: float = 1.0,
) -> float:
    """Sum over pixels of softmax cross entropy restricted to seen classes.

    Args:
        logits: (H, W, K) scores.
        gt: (H, W) integer labels; ``ignore`` pixels contribute 0.
        class_ids: class id of each logit channel.
        seen: class ids participating in the softmax (default: all).
        temperature: optional divisor of the raw scores (default 1, i.e.
            the scores are exponentiated as printed).
    """
    logits = np.asarray(logits)
    gt = np.asarray(gt)
    if logits.shape[:2] != gt.shape:
        raise DimMismatch(f"logits {logits.shape[:2]} vs mask {gt.shape}")
    if logits.shape[2] != len(class_ids):
        raise DimMismatch("one class id per logit channel required")
    channels = _seen_channels(class_ids, seen)
    gt_channels, valid = _gt_channel_map(gt, class_ids, channels, ignore)
    if not valid.any():
        return 0.0
    s = logits.astype(np.float64)[valid][:, channels] / temperature
    m = s.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(s - m).sum(axis=1))
    pos = np.searchsorted(channels, gt_channels[valid])
    picked = np.take_along_axis(s, pos[:, None], axis=1)[:, 0]
    return float(np.sum(lse - picked))


def align_loss_grad(
    logits: np.ndarray,
    gt: np.ndarray,
    class_ids: list[int] | tuple[int, ...],
    seen: list[int] | tuple[int, ...] | None = None,
    ignore: int = IGNORE,
    temperature: float = 1.0,
) -> np.ndarray:
    """Analytic gradient of align_loss w.r.t. the logits.

    softmax - onehot on seen channels, zero on ignored pixels and on
    channels outside the seen set. Returns (H, W, K) float64.
    """
    logits = np.asarray(logits)
    gt = np.asarray(gt)
    if logits.shape[:2] != gt.shape:
        raise DimMismatch(f"logits {logits.shape[:2]} vs mask {gt.shape}")
    channels = _seen_channels(class_ids, seen)
    gt_channels, valid = _gt_channel_map(gt, class_ids, channels, ignore)
    grad = np.zeros(logits.shape, dtype=np.float64)
    if not valid.any():
        return grad
    s = logits.astype(np.float64)[valid][:, channels] / temperature
    m = s.max(axis=1, keepdims=True)
    e = np.exp(s - m)
    softmax = e / e.sum(axis=1, keepdims=True)
    pos = np.searchsorted(channels, gt_channels[valid])
    softmax[np.arange(softmax.shape[0]), pos] -= 1.0
    flat = grad.reshape(-1, logits.shape[2])
    rows = np.flatnonzero(valid.ravel())
    flat[np.ix_(rows, channels)] = softmax / temperature
    return grad


def predict_labels(
    logits: np.ndarray, class_ids: list[int] | tuple[int, ...]
) -> np.ndarray:
    """Argmax over channels mapped through class_ids; ties pick the lowest k."""
    logits = np.asarray(logits)
    if logits.ndim != 3 or logits.shape[2] != len(class_ids):
        raise DimMismatch(
            f"logits {logits.shape} incompatible with {len(class_ids)} class ids"
        )
    ids = np.asarray(class_ids, dtype=np.int32)
    return ids[np.argmax(logits, axis=2)]
