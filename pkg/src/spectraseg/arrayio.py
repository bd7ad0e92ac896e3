"""Bit-exact array and mask file I/O.

Supports exactly the NPY v1.0 subset used throughout the pipeline
(little-endian f32/f64, u8, i64, C order) and binary P5 PGM masks.
The writer reproduces the stock NPY byte layout: ASCII header padded with
spaces so that preamble + header is a multiple of 64 bytes, ending in a
newline.
"""

from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    BadMagic,
    IoFailure,
    NonFiniteError,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedOrder,
)

MAGIC = b"\x93NUMPY"
_HEADER_ALIGN = 64

_DESCR_TO_DTYPE = {
    "<f4": np.dtype("<f4"),
    "<f8": np.dtype("<f8"),
    "|u1": np.dtype("u1"),
    "<i8": np.dtype("<i8"),
}
_KIND_TO_DESCR = {"f4": "<f4", "f8": "<f8", "u1": "|u1", "i8": "<i8"}


def _descr_for(array: np.ndarray) -> str:
    key = f"{array.dtype.kind}{array.dtype.itemsize}"
    descr = _KIND_TO_DESCR.get(key)
    if descr is None or array.dtype.byteorder == ">":
        raise UnsupportedDtype(
            f"dtype {array.dtype} not in supported set {sorted(_DESCR_TO_DTYPE)}"
        )
    return descr


def write_npy(path: str | Path, array: np.ndarray) -> None:
    """Write ``array`` as NPY v1.0; round-trips bit-exactly via read_npy."""
    array = np.asarray(array)
    if not array.flags.c_contiguous:
        # 0-d arrays are always contiguous, so rank is preserved here.
        array = np.ascontiguousarray(array)
    descr = _descr_for(array)
    header = (
        f"{{'descr': '{descr}', 'fortran_order': False, "
        f"'shape': {tuple(array.shape)!r}, }}"
    )
    unpadded = len(MAGIC) + 2 + 2 + len(header) + 1
    pad = (-unpadded) % _HEADER_ALIGN
    header = header + " " * pad + "\n"
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(b"\x01\x00")
            fh.write(struct.pack("<H", len(header)))
            fh.write(header.encode("latin1"))
            fh.write(array.tobytes(order="C"))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_npy(path: str | Path, allow_nonfinite: bool = False) -> np.ndarray:
    """Read an NPY v1.0 file written in the supported subset.

    Args:
        path: file to read.
        allow_nonfinite: permit NaN/Inf float payloads instead of raising.

    Raises:
        BadMagic: wrong magic bytes or a version other than 1.0.
        BadHeader: header dict malformed.
        UnsupportedDtype/UnsupportedOrder: layout outside the subset.
        TruncatedPayload: declared size does not match bytes available.
        NonFiniteError: float payload contains NaN/Inf.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(data) < 10 or data[:6] != MAGIC:
        raise BadMagic(f"{path}: not an NPY file")
    if data[6:8] != b"\x01\x00":
        raise BadMagic(f"{path}: only NPY version 1.0 is supported")
    (hlen,) = struct.unpack("<H", data[8:10])
    if len(data) < 10 + hlen:
        raise TruncatedPayload(f"{path}: header truncated")
    try:
        header = ast.literal_eval(data[10 : 10 + hlen].decode("latin1"))
        descr = header["descr"]
        fortran = header["fortran_order"]
        shape = tuple(header["shape"])
    except (ValueError, SyntaxError, KeyError, TypeError) as exc:
        raise BadHeader(f"{path}: malformed NPY header") from exc
    if descr not in _DESCR_TO_DTYPE:
        raise UnsupportedDtype(f"{path}: dtype {descr!r} unsupported")
    if fortran is not False:
        raise UnsupportedOrder(f"{path}: fortran_order=True unsupported")
    if any(not isinstance(s, int) or s < 0 for s in shape):
        raise BadHeader(f"{path}: bad shape {shape!r}")
    dtype = _DESCR_TO_DTYPE[descr]
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected = count * dtype.itemsize
    payload = data[10 + hlen :]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, header declares {expected}"
        )
    array = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    if not allow_nonfinite and dtype.kind == "f" and not np.isfinite(array).all():
        raise NonFiniteError(f"{path}: payload contains NaN or Inf")
    return array


def read_pgm(path: str | Path, ignore_value: int = 255) -> np.ndarray:
    """Read a binary (P5) PGM label mask with maxval <= 255.

    Raster byte 255 is mapped to ``ignore_value``. Returns int32 labels (H, W).
    """
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    pos = 0

    def _token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise BadHeader(f"{path}: truncated PGM header")
        return data[start:pos]

    if _token() != b"P5":
        raise BadHeader(f"{path}: not a binary P5 PGM")
    try:
        width, height, maxval = int(_token()), int(_token()), int(_token())
    except ValueError as exc:
        raise BadHeader(f"{path}: non-numeric PGM header field") from exc
    if width < 1 or height < 1:
        raise BadHeader(f"{path}: bad dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise BadHeader(f"{path}: maxval {maxval} outside 1..255")
    pos += 1  # single whitespace byte after maxval
    if len(data) - pos < width * height:
        raise TruncatedPayload(f"{path}: raster truncated")
    raster = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8)
    labels = raster.reshape(height, width).astype(np.int32)
    if ignore_value != 255:
        labels[labels == 255] = ignore_value
    return labels


def write_pgm(path: str | Path, labels: np.ndarray, ignore_value: int = 255) -> None:
    """Write an integer label mask as binary P5 PGM (values 0..255)."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError(f"labels must be 2-D, got shape {labels.shape}")
    out = labels.copy()
    out[out == ignore_value] = 255
    if out.min() < 0 or out.max() > 255:
        raise ValueError("labels outside 0..255 cannot be stored as PGM")
    h, w = out.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(out.astype(np.uint8).tobytes(order="C"))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
