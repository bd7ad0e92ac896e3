"""Batch manifest parsing.

A manifest is a UTF-8 TSV file. Comment lines starting with ``#`` may carry
``key=value`` directives that describe run-wide inputs (anchor file, class
ids and names, dataset/fold/scheme defaults). Record lines have four or
five tab-separated columns:

    image<TAB>vl_features<TAB>ssl_features<TAB>gt[<TAB>boundary]

where ``image`` is an (H, W, 3) uint8 NPY, ``vl_features`` and
``ssl_features`` are (H, W, D) float NPY maps, ``gt`` is a P5 PGM label
mask and ``boundary`` is an (H, W) float NPY edge probability map. A ``-``
marks a column as absent; stages that need it fail for that record only.
All paths are resolved relative to the manifest's directory.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

_DIRECTIVE_KEYS = {
    "anchors",
    "class_ids",
    "class_names",
    "dataset",
    "fold",
    "scheme",
    "background_id",
}


@dataclass(frozen=True)
class ManifestRecord:
    """One image's input files; None marks an absent column."""

    name: str
    image: Path | None
    vl_features: Path | None
    ssl_features: Path | None
    gt: Path | None
    boundary: Path | None


@dataclass(frozen=True)
class Manifest:
    path: Path
    records: tuple[ManifestRecord, ...]
    anchors_path: Path | None
    class_ids: tuple[int, ...] | None
    class_names: tuple[str, ...] | None
    dataset: str | None
    fold: int | None
    scheme: str | None
    background_id: int


def _resolve(base: Path, cell: str, lineno: int, manifest: Path) -> Path | None:
    if cell == "-":
        return None
    p = (base / cell).resolve() if not Path(cell).is_absolute() else Path(cell)
    if not p.is_file():
        raise ManifestError(f"{manifest}:{lineno}: missing input file {cell!r}")
    return p


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest; referenced files must exist."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    directives: dict[str, str] = {}
    records: list[ManifestRecord] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            body = line.lstrip()[1:].strip()
            if "=" not in body:
                continue  # plain comment
            key, value = (part.strip() for part in body.split("=", 1))
            if key not in _DIRECTIVE_KEYS:
                raise ManifestError(f"{path}:{lineno}: unknown directive {key!r}")
            if key in directives:
                raise ManifestError(f"{path}:{lineno}: duplicate directive {key!r}")
            directives[key] = value
            continue
        cells = line.split("\t")
        if len(cells) not in (4, 5):
            raise ManifestError(
                f"{path}:{lineno}: expected 4 or 5 tab-separated columns, "
                f"got {len(cells)}"
            )
        if len(cells) == 4:
            cells.append("-")
        paths = [_resolve(base, cell.strip(), lineno, path) for cell in cells]
        named = next((p for p in paths if p is not None), None)
        if named is None:
            raise ManifestError(f"{path}:{lineno}: record with no inputs")
        records.append(
            ManifestRecord(
                name=named.stem,
                image=paths[0],
                vl_features=paths[1],
                ssl_features=paths[2],
                gt=paths[3],
                boundary=paths[4],
            )
        )
    if not records:
        raise ManifestError(f"{path}: manifest lists no records")

    class_ids = None
    if "class_ids" in directives:
        try:
            class_ids = tuple(
                int(tok) for tok in directives["class_ids"].split(",") if tok.strip()
            )
        except ValueError as exc:
            raise ManifestError(f"{path}: bad class_ids directive") from exc
        if len(set(class_ids)) != len(class_ids):
            raise ManifestError(f"{path}: duplicate ids in class_ids directive")
    class_names = None
    if "class_names" in directives:
        class_names = tuple(
            tok.strip() for tok in directives["class_names"].split(",") if tok.strip()
        )
    if class_ids and class_names and len(class_ids) != len(class_names):
        raise ManifestError(
            f"{path}: class_ids and class_names lengths differ "
            f"({len(class_ids)} vs {len(class_names)})"
        )
    fold = None
    if "fold" in directives:
        try:
            fold = int(directives["fold"])
        except ValueError as exc:
            raise ManifestError(f"{path}: bad fold directive") from exc
    background_id = 0
    if "background_id" in directives:
        try:
            background_id = int(directives["background_id"])
        except ValueError as exc:
            raise ManifestError(f"{path}: bad background_id directive") from exc
    anchors_path = None
    if "anchors" in directives:
        anchors_path = _resolve(base, directives["anchors"], 0, path)

    return Manifest(
        path=path,
        records=tuple(records),
        anchors_path=anchors_path,
        class_ids=class_ids,
        class_names=class_names,
        dataset=directives.get("dataset"),
        fold=fold,
        scheme=directives.get("scheme"),
        background_id=background_id,
    )
