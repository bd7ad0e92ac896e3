"""Benchmark fold definitions for the 4-fold class splits.

Class ids are 1-based; id 0 is background. Each dataset is split into four
folds of equal size; the target (unseen) fold is held out while the other
three are seen. Two split schemes are supported: ``sequential`` blocks
(default, matching the per-category table ordering) and ``interleaved``
(class id modulo 4).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadFold

PASCAL_CLASSES = (
    "aeroplane", "bicycle", "bird", "boat", "bottle",
    "bus", "car", "cat", "chair", "cow",
    "diningtable", "dog", "horse", "motorbike", "person",
    "pottedplant", "sheep", "sofa", "train", "tvmonitor",
)

COCO_CLASSES = (
    "person", "bicycle", "car", "motorbike", "aeroplane",
    "bus", "train", "truck", "boat", "trafficlight",
    "firehydrant", "stopsign", "parkingmeter", "bench", "bird",
    "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack",
    "umbrella", "handbag", "tie", "suitcase", "frisbee",
    "skis", "snowboard", "sportsball", "kite", "baseballbat",
    "baseballglove", "skateboard", "surfboard", "tennisracket", "bottle",
    "wineglass", "cup", "fork", "knife", "spoon",
    "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hotdog", "pizza", "donut",
    "cake", "chair", "sofa", "pottedplant", "bed",
    "diningtable", "toilet", "tvmonitor", "laptop", "mouse",
    "remote", "keyboard", "cellphone", "microwave", "oven",
    "toaster", "sink", "refrigerator", "book", "clock",
    "vase", "scissors", "teddybear", "hairdrier", "toothbrush",
)

_DATASETS = {"pascal5i": PASCAL_CLASSES, "coco20i": COCO_CLASSES}


@dataclass(frozen=True)
class FoldSpec:
    """One train/test class split: disjoint seen and unseen id tuples."""

    dataset: str
    fold: int
    seen: tuple[int, ...]
    unseen: tuple[int, ...]
    scheme: str

    @property
    def num_classes(self) -> int:
        return len(self.seen) + len(self.unseen)


def class_names(dataset: str) -> tuple[str, ...]:
    try:
        return _DATASETS[dataset]
    except KeyError:
        raise BadFold(f"unknown dataset {dataset!r}") from None


def fold_classes(dataset: str, fold: int, scheme: str = "sequential") -> FoldSpec:
    """Build the FoldSpec for one target fold.

    sequential: unseen classes are a contiguous 1-based block
    (pascal5i: 5*fold+1..5*fold+5; coco20i: 20*fold+1..20*fold+20).
    interleaved: unseen = {4j + fold + 1}.
    """
    names = class_names(dataset)
    if fold not in (0, 1, 2, 3):
        raise BadFold(f"fold must be 0..3, got {fold}")
    if scheme not in ("sequential", "interleaved"):
        raise BadFold(f"unknown scheme {scheme!r}")
    per_fold = len(names) // 4
    if scheme == "sequential":
        unseen = tuple(range(per_fold * fold + 1, per_fold * (fold + 1) + 1))
    else:
        unseen = tuple(4 * j + fold + 1 for j in range(per_fold))
    seen = tuple(c for c in range(1, len(names) + 1) if c not in set(unseen))
    return FoldSpec(dataset=dataset, fold=fold, seen=seen, unseen=unseen, scheme=scheme)


def ids_to_names(dataset: str, ids: tuple[int, ...] | list[int]) -> tuple[str, ...]:
    names = class_names(dataset)
    return tuple(names[i - 1] for i in ids)
