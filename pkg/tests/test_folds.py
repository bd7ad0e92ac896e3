"""Fold definitions: class splits, schemes, name tables."""

import pytest

from spectraseg.errors import BadFold
from spectraseg.folds import (
    COCO_CLASSES,
    PASCAL_CLASSES,
    class_names,
    fold_classes,
    ids_to_names,
)


def test_class_tables():
    assert len(PASCAL_CLASSES) == 20
    assert len(COCO_CLASSES) == 80
    assert PASCAL_CLASSES[0] == "aeroplane"
    assert PASCAL_CLASSES[-1] == "tvmonitor"
    assert COCO_CLASSES[0] == "person"
    assert COCO_CLASSES[-1] == "toothbrush"
    assert len(set(PASCAL_CLASSES)) == 20
    assert len(set(COCO_CLASSES)) == 80


def test_sequential_blocks():
    spec = fold_classes("pascal5i", 0)
    assert spec.unseen == (1, 2, 3, 4, 5)
    assert spec.seen == tuple(range(6, 21))
    assert ids_to_names("pascal5i", spec.unseen) == (
        "aeroplane", "bicycle", "bird", "boat", "bottle",
    )
    assert fold_classes("pascal5i", 3).unseen == (16, 17, 18, 19, 20)
    assert fold_classes("coco20i", 2).unseen == tuple(range(41, 61))


def test_interleaved_stride():
    spec = fold_classes("coco20i", 1, scheme="interleaved")
    assert spec.unseen == tuple(4 * j + 2 for j in range(20))
    assert fold_classes("pascal5i", 0, scheme="interleaved").unseen == (1, 5, 9, 13, 17)


@pytest.mark.parametrize("dataset,total", [("pascal5i", 20), ("coco20i", 80)])
@pytest.mark.parametrize("scheme", ["sequential", "interleaved"])
def test_partition_properties(dataset, total, scheme):
    for fold in range(4):
        spec = fold_classes(dataset, fold, scheme=scheme)
        assert not set(spec.seen) & set(spec.unseen)
        assert sorted(spec.seen + spec.unseen) == list(range(1, total + 1))
        assert len(spec.unseen) == total // 4
        assert spec.num_classes == total
        assert spec.scheme == scheme
    # the four unseen sets tile the class range
    union = set()
    for fold in range(4):
        union |= set(fold_classes(dataset, fold, scheme=scheme).unseen)
    assert union == set(range(1, total + 1))


def test_fold_errors():
    with pytest.raises(BadFold):
        fold_classes("pascal5i", 4)
    with pytest.raises(BadFold):
        fold_classes("pascal5i", -1)
    with pytest.raises(BadFold):
        fold_classes("imagenet", 0)
    with pytest.raises(BadFold):
        fold_classes("pascal5i", 0, scheme="striped")
    with pytest.raises(BadFold):
        class_names("ade20k")
