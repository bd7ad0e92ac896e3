"""Pure-NumPy implementations of the hot kernels.

Mirrors ``_native`` (the Cython extension) exactly: same signatures, same
arithmetic order where ties or bit-level agreement matter. Selection between
the two happens in ``spectraseg._kernels``.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def sobel_magnitude(field: np.ndarray) -> np.ndarray:
    """Unnormalised Sobel gradient magnitude with replicate-padded borders.

    Args:
        field: 2-D float64 array, at least 3x3.

    Returns:
        2-D float64 array of sqrt(gx^2 + gy^2).
    """
    p = np.pad(field, 1, mode="edge")
    gx = (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]
    )
    gy = (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]
    )
    return np.sqrt(gx * gx + gy * gy)


def knn_edges(coords: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """K nearest neighbours of every row by Euclidean distance.

    Self-matches are excluded. Ties are broken by the lower row index, so the
    result is fully deterministic.

    Args:
        coords: (n, d) float64 point matrix.
        k: number of neighbours per point; requires n >= k + 1.

    Returns:
        (idx, dist): (n, k) int64 neighbour indices ordered by increasing
        distance, and the matching (n, k) float64 distances.
    """
    n, dim = coords.shape
    if not 1 <= k <= n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got k={k} for n={n}")
    idx = np.empty((n, k), dtype=np.int64)
    d2_out = np.empty((n, k), dtype=np.float64)
    # Chunked so the (chunk, n) distance slab stays small. Squared distances
    # accumulate dimension by dimension, matching the compiled backend's
    # addition order bit for bit.
    chunk = max(1, int(4_000_000 // max(n, 1)))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        d2 = np.zeros((hi - lo, n))
        for c in range(dim):
            t = coords[lo:hi, c][:, None] - coords[None, :, c]
            d2 += t * t
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        idx[lo:hi] = order
        d2_out[lo:hi] = np.take_along_axis(d2, order, axis=1)
    return idx, np.sqrt(d2_out)


def bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample ``img`` at fractional (x, y) pixel coordinates.

    Coordinates are (column, row). Contributions from corners outside the
    image are zero (zero padding).
    """
    h, w = img.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    out = np.zeros(xs.shape, dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            ok = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            if np.any(ok):
                out[ok] += wgt[ok] * img[yi[ok], xi[ok]]
    return out


def crack_perimeter(mask: np.ndarray) -> int:
    """Count unit edges between mask pixels and non-mask/border pixels.

    4-connectivity crack length: every side of a mask pixel that faces a
    non-mask pixel or the image border contributes 1.
    """
    m = mask.astype(bool)
    p = np.pad(m, 1, mode="constant", constant_values=False)
    inner = p[1:-1, 1:-1]
    total = 0
    for shifted in (p[:-2, 1:-1], p[2:, 1:-1], p[1:-1, :-2], p[1:-1, 2:]):
        total += int(np.count_nonzero(inner & ~shifted))
    return total
