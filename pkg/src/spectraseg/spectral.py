"""Spectral decomposition of pixel affinity graphs into eigensegments.

Pixels form a graph whose affinity combines a dense semantic term (clamped
feature Gram matrix) with an optional sparse color-position KNN term. The
normalized Laplacian of that graph is decomposed either densely or with a
restarted Lanczos iteration, and the low eigenvectors are binarized into
candidate segment masks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import GraphTooLarge, NoConvergence, NonFiniteError, ShapeMismatch
from .params import HyperParams

logger = logging.getLogger(__name__)

COVERAGE_MAX = 0.98
RESIDUAL_TOL = 1e-8
MAX_RESTARTS = 5
DENSE_CUTOFF = 1024


def color_position_features(image: np.ndarray) -> np.ndarray:
    """Per-pixel (cos h, sin h, s, v, x, y) rows for the KNN affinity graph.

    Accepts an (H, W, 3) RGB image, uint8 or floats in [0, 1]. Hue is in
    radians; grey pixels take hue 0. x and y are column and row positions
    scaled to [0, 1].
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected (H, W, 3) image, got {image.shape}")
    rgb = image.astype(np.float64)
    if image.dtype == np.uint8:
        rgb = rgb / 255.0
    if rgb.min() < 0.0 or rgb.max() > 1.0:
        raise ValueError("float image values must lie in [0, 1]")
    h, w = rgb.shape[:2]
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]

    cmax = rgb.max(axis=2)
    cmin = rgb.min(axis=2)
    delta = cmax - cmin
    sat = np.where(cmax > 0.0, delta / np.where(cmax > 0.0, cmax, 1.0), 0.0)

    hue = np.zeros((h, w))
    chroma = np.where(delta > 0.0, delta, 1.0)
    r_max = (cmax == r) & (delta > 0.0)
    g_max = (cmax == g) & (delta > 0.0) & ~r_max
    b_max = (delta > 0.0) & ~r_max & ~g_max
    hue[r_max] = np.mod((g - b)[r_max] / chroma[r_max], 6.0)
    hue[g_max] = (b - r)[g_max] / chroma[g_max] + 2.0
    hue[b_max] = (r - g)[b_max] / chroma[b_max] + 4.0
    hue = hue * (np.pi / 3.0)

    xs = np.arange(w, dtype=np.float64) / (w - 1) if w > 1 else np.zeros(w)
    ys = np.arange(h, dtype=np.float64) / (h - 1) if h > 1 else np.zeros(h)
    gx, gy = np.meshgrid(xs, ys)

    feats = np.stack(
        [np.cos(hue), np.sin(hue), sat, cmax, gx, gy], axis=2
    )
    return feats.reshape(h * w, 6)


def semantic_affinity(features: np.ndarray, n_max: int = 8192) -> np.ndarray:
    """Dense affinity from pairwise feature dot products, clamped at zero."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ShapeMismatch(f"expected (n, d) features, got {feats.shape}")
    n = feats.shape[0]
    if n > n_max:
        raise GraphTooLarge(f"{n} pixels exceed the dense limit of {n_max}")
    if not np.isfinite(feats).all():
        raise NonFiniteError("semantic features contain NaN or Inf")
    gram = feats @ feats.T
    np.maximum(gram, 0.0, out=gram)
    return gram


def shape_affinity(coords: np.ndarray, k_nn: int = 8) -> np.ndarray:
    """Symmetric KNN affinity over color-position rows.

    Each row connects to its k_nn nearest other rows with weight
    max(0, 1 - distance); the matrix is symmetrized by elementwise max.
    """
    pts = np.ascontiguousarray(coords, dtype=np.float64)
    if pts.ndim != 2:
        raise ShapeMismatch(f"expected (n, d) coordinates, got {pts.shape}")
    n = pts.shape[0]
    if not 1 <= k_nn < n:
        raise ValueError(f"k_nn must be in [1, {n - 1}], got {k_nn}")
    idx, dist = kernels.knn_edges(pts, k_nn)
    weights = np.maximum(0.0, 1.0 - dist)
    z = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k_nn)
    z[rows, idx.ravel()] = weights.ravel()
    return np.maximum(z, z.T)


def combine_affinity(
    sem: np.ndarray, shape: np.ndarray | None, lam: float
) -> np.ndarray:
    """Weighted sum of the semantic and color-position affinities."""
    if lam == 0.0 or shape is None:
        if lam != 0.0:
            raise ValueError("lambda_affinity > 0 requires a shape affinity")
        return sem
    if sem.shape != shape.shape:
        raise ShapeMismatch(f"affinity shapes differ: {sem.shape} vs {shape.shape}")
    return sem + lam * shape


def normalized_laplacian(affinity: np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian; isolated vertices get a unit diagonal."""
    z = np.asarray(affinity, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ShapeMismatch(f"affinity must be square, got {z.shape}")
    if z.min() < -1e-12:
        raise ValueError("affinity entries must be non-negative")
    deg = z.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    positive = deg > 0.0
    inv_sqrt[positive] = 1.0 / np.sqrt(deg[positive])
    lap = -(inv_sqrt[:, None] * z) * inv_sqrt[None, :]
    np.fill_diagonal(lap, lap.diagonal() + 1.0)
    return (lap + lap.T) / 2.0


def _orient_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    Magnitude ties resolve to the lowest index, making the orientation
    deterministic for either eigensolver route.
    """
    out = vectors.copy()
    for j in range(out.shape[1]):
        lead = int(np.argmax(np.abs(out[:, j])))
        if out[lead, j] < 0.0:
            out[:, j] = -out[:, j]
    return out


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Ascending eigenvalues and sign-normalized eigenvectors."""

    eigenvalues: np.ndarray  # (m,)
    eigenvectors: np.ndarray  # (n, m), columns match eigenvalues
    method: str


def _dense_eigensolve(lap: np.ndarray, count: int) -> LaplacianSpectrum:
    values, vectors = np.linalg.eigh(lap)
    return LaplacianSpectrum(
        eigenvalues=values[:count].copy(),
        eigenvectors=_orient_signs(vectors[:, :count]),
        method="dense",
    )


def _orthogonalize(vec: np.ndarray, basis: np.ndarray, cols: int) -> np.ndarray:
    # Two Gram-Schmidt passes keep the basis orthonormal to machine precision.
    for _ in range(2):
        if cols > 0:
            vec = vec - basis[:, :cols] @ (basis[:, :cols].T @ vec)
    return vec


def _lanczos_eigensolve(
    lap: np.ndarray, count: int, seed: int
) -> LaplacianSpectrum:
    n = lap.shape[0]
    rng = np.random.default_rng(seed)
    basis = np.zeros((n, n))
    images = np.zeros((n, n))  # lap @ basis, column for column
    start = rng.standard_normal(n)
    basis[:, 0] = start / np.linalg.norm(start)
    cols = 1
    cap = min(n, max(2 * count + 10, 30))

    for restart in range(MAX_RESTARTS + 1):
        while cols < cap:
            w = lap @ basis[:, cols - 1]
            images[:, cols - 1] = w
            w = _orthogonalize(w, basis, cols)
            norm = np.linalg.norm(w)
            if norm < 1e-10:
                # Krylov space exhausted: continue from a fresh direction.
                w = _orthogonalize(rng.standard_normal(n), basis, cols)
                norm = np.linalg.norm(w)
                if norm < 1e-10:
                    break
            basis[:, cols] = w / norm
            cols += 1
        images[:, cols - 1] = lap @ basis[:, cols - 1]

        projected = basis[:, :cols].T @ images[:, :cols]
        projected = (projected + projected.T) / 2.0
        ritz_values, ritz_vectors = np.linalg.eigh(projected)
        take = min(count, cols)
        candidates = basis[:, :cols] @ ritz_vectors[:, :take]
        residuals = np.linalg.norm(
            images[:, :cols] @ ritz_vectors[:, :take]
            - candidates * ritz_values[:take],
            axis=0,
        )
        if cols >= count and residuals.max() <= RESIDUAL_TOL:
            return LaplacianSpectrum(
                eigenvalues=ritz_values[:count].copy(),
                eigenvectors=_orient_signs(candidates[:, :count]),
                method="lanczos",
            )
        if cap >= n and restart > 0:
            break
        cap = min(n, cap * 2)
        logger.debug(
            "lanczos restart %d: cap %d, worst residual %.3e",
            restart + 1,
            cap,
            residuals.max(),
        )
    raise NoConvergence(
        f"lanczos failed to reach residual {RESIDUAL_TOL} for {count} pairs"
    )


def eigensolve(
    lap: np.ndarray,
    count: int,
    method: str = "auto",
    seed: int = 42,
) -> LaplacianSpectrum:
    """First `count` eigenpairs of a symmetric matrix, ascending.

    method "dense" uses a full symmetric decomposition, "lanczos" a seeded
    restarted iteration with full reorthogonalization, and "auto" picks
    dense for small matrices. Both routes orient signs identically and are
    deterministic for fixed inputs and seed.
    """
    lap = np.asarray(lap, dtype=np.float64)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise ShapeMismatch(f"matrix must be square, got {lap.shape}")
    n = lap.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"count must be in [1, {n}], got {count}")
    if not np.isfinite(lap).all():
        raise NonFiniteError("matrix contains NaN or Inf")
    asym = np.abs(lap - lap.T).max()
    if asym > 1e-10:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    if method == "auto":
        method = "dense" if n <= DENSE_CUTOFF else "lanczos"
    if method == "dense":
        return _dense_eigensolve(lap, count)
    if method == "lanczos":
        return _lanczos_eigensolve(lap, count, seed)
    raise ValueError(f"unknown eigensolver method: {method!r}")


def eigensegments(
    spectrum: LaplacianSpectrum, k_eig: int, coverage_max: float = COVERAGE_MAX
) -> tuple[list[np.ndarray], list[int]]:
    """Binarize eigenvectors 1..k_eig at their means into candidate masks.

    The constant eigenvector 0 is skipped. Masks that are empty or cover
    more than coverage_max of the pixels are dropped; the second return
    value lists the dropped eigenvector indices.
    """
    if k_eig < 1:
        raise ValueError(f"k_eig must be positive, got {k_eig}")
    vectors = spectrum.eigenvectors
    n, m = vectors.shape
    if k_eig + 1 > m:
        raise ValueError(
            f"need {k_eig + 1} eigenvectors for k_eig={k_eig}, have {m}"
        )
    segments: list[np.ndarray] = []
    dropped: list[int] = []
    for j in range(1, k_eig + 1):
        vec = vectors[:, j]
        mask = vec > vec.mean()
        covered = int(mask.sum())
        if covered == 0 or covered > coverage_max * n:
            dropped.append(j)
        else:
            segments.append(mask)
    return segments, dropped


def decompose_image(
    features: np.ndarray,
    image: np.ndarray | None,
    hp: HyperParams,
    method: str = "auto",
    seed: int = 42,
) -> tuple[list[np.ndarray], list[int], LaplacianSpectrum]:
    """Eigensegments of one image from (H, W, D) self-supervised features.

    When hp.lambda_affinity > 0 an RGB image must accompany the features to
    build the color-position term. Returned masks have shape (H, W).
    """
    features = np.asarray(features)
    if features.ndim != 3:
        raise ShapeMismatch(f"expected (H, W, D) features, got {features.shape}")
    h, w = features.shape[:2]
    flat = features.reshape(h * w, features.shape[2])

    sem = semantic_affinity(flat, n_max=hp.n_dense_max)
    shp = None
    if hp.lambda_affinity > 0.0:
        if image is None:
            raise ValueError("lambda_affinity > 0 requires an RGB image")
        if image.shape[:2] != (h, w):
            raise ShapeMismatch(
                f"image {image.shape[:2]} does not match features {(h, w)}"
            )
        shp = shape_affinity(color_position_features(image), k_nn=hp.k_nn)
    affinity = combine_affinity(sem, shp, hp.lambda_affinity)
    lap = normalized_laplacian(affinity)
    spectrum = eigensolve(lap, hp.k_eig + 1, method=method, seed=seed)
    flat_segments, dropped = eigensegments(spectrum, hp.k_eig)
    return [seg.reshape(h, w) for seg in flat_segments], dropped, spectrum
