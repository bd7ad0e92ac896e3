"""Manifest TSV parsing and validation."""

import numpy as np
import pytest

from spectraseg.arrayio import write_npy
from spectraseg.errors import ManifestError
from spectraseg.manifest import load_manifest


def _touch_npy(path, shape=(2, 2)):
    write_npy(path, np.zeros(shape, dtype=np.float32))
    return path


def _write(tmp_path, text, name="run.tsv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_full_manifest(tmp_path):
    for stem in ("cat", "dog"):
        _touch_npy(tmp_path / f"{stem}.npy")
        _touch_npy(tmp_path / f"{stem}_vl.npy")
        _touch_npy(tmp_path / f"{stem}_ssl.npy")
        _touch_npy(tmp_path / f"{stem}_gt.npy")
    _touch_npy(tmp_path / "anchors.npy")
    (tmp_path / "sub").mkdir()
    _touch_npy(tmp_path / "sub" / "edge.npy")

    text = "\n".join(
        [
            "# run-wide configuration",
            "# anchors = anchors.npy",
            "# class_ids = 1, 2, 3",
            "# class_names = cat, dog, bird",
            "# dataset = pascal5i",
            "# fold = 2",
            "# scheme = sequential",
            "# background_id = 0",
            "",
            "cat.npy\tcat_vl.npy\tcat_ssl.npy\tcat_gt.npy\tsub/edge.npy",
            "dog.npy\tdog_vl.npy\tdog_ssl.npy\tdog_gt.npy",
        ]
    )
    m = load_manifest(_write(tmp_path, text))
    assert len(m.records) == 2
    assert m.records[0].name == "cat"
    assert m.records[0].boundary == (tmp_path / "sub" / "edge.npy").resolve()
    assert m.records[1].boundary is None
    assert m.anchors_path == (tmp_path / "anchors.npy").resolve()
    assert m.class_ids == (1, 2, 3)
    assert m.class_names == ("cat", "dog", "bird")
    assert m.dataset == "pascal5i" and m.fold == 2 and m.scheme == "sequential"
    assert m.background_id == 0


def test_placeholders_and_naming(tmp_path):
    _touch_npy(tmp_path / "x_vl.npy")
    _touch_npy(tmp_path / "x_gt.npy")
    m = load_manifest(_write(tmp_path, "-\tx_vl.npy\t-\tx_gt.npy"))
    rec = m.records[0]
    assert rec.image is None and rec.ssl_features is None
    assert rec.name == "x_vl"  # stem of the first present column
    assert rec.gt == (tmp_path / "x_gt.npy").resolve()


def test_absolute_paths_pass_through(tmp_path):
    target = _touch_npy(tmp_path / "abs.npy")
    other = tmp_path / "other"
    other.mkdir()
    m = load_manifest(_write(other, f"{target}\t-\t-\t-"))
    assert m.records[0].image == target


def test_manifest_errors(tmp_path):
    _touch_npy(tmp_path / "a.npy")

    with pytest.raises(ManifestError, match="missing input file"):
        load_manifest(_write(tmp_path, "ghost.npy\t-\t-\t-"))
    with pytest.raises(ManifestError, match="4 or 5 tab-separated"):
        load_manifest(_write(tmp_path, "a.npy\t-\t-"))
    with pytest.raises(ManifestError, match="4 or 5 tab-separated"):
        load_manifest(_write(tmp_path, "a.npy\t-\t-\t-\t-\t-"))
    with pytest.raises(ManifestError, match="no inputs"):
        load_manifest(_write(tmp_path, "-\t-\t-\t-"))
    with pytest.raises(ManifestError, match="no records"):
        load_manifest(_write(tmp_path, "# just a comment\n"))
    with pytest.raises(ManifestError, match="unknown directive"):
        load_manifest(_write(tmp_path, "# color = blue\na.npy\t-\t-\t-"))
    with pytest.raises(ManifestError, match="duplicate directive"):
        load_manifest(
            _write(tmp_path, "# fold = 1\n# fold = 2\na.npy\t-\t-\t-")
        )
    with pytest.raises(ManifestError, match="bad class_ids"):
        load_manifest(_write(tmp_path, "# class_ids = 1, two\na.npy\t-\t-\t-"))
    with pytest.raises(ManifestError, match="duplicate ids"):
        load_manifest(_write(tmp_path, "# class_ids = 1, 1\na.npy\t-\t-\t-"))
    with pytest.raises(ManifestError, match="lengths differ"):
        load_manifest(
            _write(
                tmp_path,
                "# class_ids = 1, 2\n# class_names = only\na.npy\t-\t-\t-",
            )
        )
    with pytest.raises(ManifestError, match="bad fold"):
        load_manifest(_write(tmp_path, "# fold = first\na.npy\t-\t-\t-"))
    with pytest.raises(ManifestError, match="bad background_id"):
        load_manifest(_write(tmp_path, "# background_id = x\na.npy\t-\t-\t-"))
    with pytest.raises(ManifestError, match="cannot read"):
        load_manifest(tmp_path / "nope.tsv")


def test_plain_comments_and_blank_lines_skipped(tmp_path):
    _touch_npy(tmp_path / "a.npy")
    text = "# written by hand\n\n   \na.npy\t-\t-\t-\n"
    m = load_manifest(_write(tmp_path, text))
    assert len(m.records) == 1
    assert m.dataset is None and m.fold is None and m.class_ids is None
