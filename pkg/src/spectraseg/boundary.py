"""Boundary-detection objective: edge extraction, patch splitting, the
affine-deviation shape loss and the edge BCE loss.

The shape loss measures, per patch, how far the best affine warp relating
the predicted and reference boundary maps is from the identity. The warp is
estimated by a deterministic inverse-compositional Gauss-Newton fit in
normalized [-1, 1]^2 patch coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import NonFiniteError, ShapeMismatch, TooSmall
from .params import HyperParams

IDENTITY_2X3 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

GN_MAX_ITERS = 50
GN_STEP_TOL = 1e-8
MASS_EPS = 1e-6
BCE_CLAMP = 1e-7


def sobel(field: np.ndarray) -> np.ndarray:
    """Sobel gradient magnitude, replicate-padded, normalized to max 1.

    A constant field (max magnitude 0) maps to all zeros.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2 or field.shape[0] < 3 or field.shape[1] < 3:
        raise TooSmall(f"sobel needs at least 3x3, got {field.shape}")
    if not np.isfinite(field).all():
        raise NonFiniteError("sobel input contains NaN or Inf")
    mag = kernels.sobel_magnitude(np.ascontiguousarray(field))
    peak = mag.max()
    if peak > 0.0:
        mag = mag / peak
    return mag


def mask_to_edges(gt: np.ndarray, ignore: int = 255) -> np.ndarray:
    """Binary boundary map of a label mask.

    A pixel is an edge iff any 8-neighbour carries a different non-ignored
    label; ignored pixels are never edges and never witness a difference.
    Invariant under any relabeling of the mask.
    """
    gt = np.asarray(gt)
    h, w = gt.shape
    valid = gt != ignore
    edge = np.zeros((h, w), dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            a_r = slice(max(0, di), h + min(0, di))
            a_c = slice(max(0, dj), w + min(0, dj))
            b_r = slice(max(0, -di), h + min(0, -di))
            b_c = slice(max(0, -dj), w + min(0, -dj))
            differ = (
                (gt[a_r, a_c] != gt[b_r, b_c])
                & valid[a_r, a_c]
                & valid[b_r, b_c]
            )
            edge[a_r, a_c] |= differ
    return edge.astype(np.float64)


@dataclass(frozen=True)
class PatchGrid:
    """Rectangular tiling of a map; the last row/column absorbs remainders."""

    rows: int
    cols: int
    bounds: tuple[tuple[int, int, int, int], ...]  # (r0, r1, c0, c1) per patch

    def extract(self, field: np.ndarray) -> list[np.ndarray]:
        return [field[r0:r1, c0:c1] for r0, r1, c0, c1 in self.bounds]


def split_patches(shape: tuple[int, int], rows: int = 3, cols: int = 6) -> PatchGrid:
    """Tile an (H, W) grid into rows x cols disjoint patches."""
    h, w = shape
    if h < rows or w < cols:
        raise TooSmall(f"cannot split {h}x{w} into {rows}x{cols} patches")
    ph, pw = h // rows, w // cols
    bounds = []
    for r in range(rows):
        r0 = r * ph
        r1 = (r + 1) * ph if r < rows - 1 else h
        for c in range(cols):
            c0 = c * pw
            c1 = (c + 1) * pw if c < cols - 1 else w
            bounds.append((r0, r1, c0, c1))
    return PatchGrid(rows=rows, cols=cols, bounds=tuple(bounds))


def _normalized_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(-1.0, 1.0, w) if w > 1 else np.zeros(1)
    ys = np.linspace(-1.0, 1.0, h) if h > 1 else np.zeros(1)
    gx, gy = np.meshgrid(xs, ys)
    return gx.ravel(), gy.ravel()


def estimate_affine(pred_patch: np.ndarray, gt_patch: np.ndarray) -> np.ndarray:
    """Affine warp (2x3, normalized coordinates) mapping gt onto pred.

    Inverse-compositional Gauss-Newton from an identity start, bilinear
    sampling with zero padding, at most GN_MAX_ITERS iterations or a step
    norm below GN_STEP_TOL. Patches whose total mass is below MASS_EPS carry
    no shape signal and return the identity exactly.
    """
    pred = np.ascontiguousarray(pred_patch, dtype=np.float64)
    gt = np.ascontiguousarray(gt_patch, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"patch shapes differ: {pred.shape} vs {gt.shape}")
    if not (np.isfinite(pred).all() and np.isfinite(gt).all()):
        raise NonFiniteError("affine estimation requires finite patches")
    if np.abs(pred).sum() < MASS_EPS or np.abs(gt).sum() < MASS_EPS:
        return IDENTITY_2X3.copy()

    h, w = gt.shape
    gx, gy = _normalized_grid(h, w)

    # Template gradient w.r.t. normalized coordinates.
    grad_row, grad_col = np.gradient(gt)
    tx = (grad_col * ((w - 1) / 2.0 if w > 1 else 0.0)).ravel()
    ty = (grad_row * ((h - 1) / 2.0 if h > 1 else 0.0)).ravel()

    # Steepest-descent images for p = (a-1, b, tx, c, d-1, ty).
    jac = np.stack([tx * gx, tx * gy, tx, ty * gx, ty * gy, ty], axis=1)
    hess = jac.T @ jac

    col_scale = (w - 1) / 2.0
    row_scale = (h - 1) / 2.0
    template = gt.ravel()

    def residual(theta: np.ndarray) -> tuple[np.ndarray, float]:
        xw = theta[0, 0] * gx + theta[0, 1] * gy + theta[0, 2]
        yw = theta[1, 0] * gx + theta[1, 1] * gy + theta[1, 2]
        warped = kernels.bilinear_sample(
            pred, (xw + 1.0) * col_scale, (yw + 1.0) * row_scale
        )
        err = warped - template
        return err, float(err @ err)

    def composed(theta: np.ndarray, delta: np.ndarray) -> np.ndarray | None:
        step = np.eye(3)
        step[0, :] += (delta[0], delta[1], delta[2])
        step[1, :] += (delta[3], delta[4], delta[5])
        try:
            return theta @ np.linalg.inv(step)
        except np.linalg.LinAlgError:
            return None

    theta = np.eye(3)
    err, res = residual(theta)
    for _ in range(GN_MAX_ITERS):
        rhs = jac.T @ err
        # Minimum-norm solve keeps the step sane on low-texture patches
        # whose Gauss-Newton Hessian is (near) singular.
        delta = np.linalg.lstsq(hess, rhs, rcond=None)[0]
        if np.linalg.norm(delta) < GN_STEP_TOL:
            break
        # Try the full step first, halving while the residual does not
        # strictly drop, so converging fits follow the undamped iteration
        # exactly and divergent ones stop at the best transform found.
        accepted = False
        scaled = delta
        for _ in range(8):
            candidate = composed(theta, scaled)
            if candidate is not None:
                cand_err, cand_res = residual(candidate)
                if cand_res < res:
                    theta, err, res = candidate, cand_err, cand_res
                    accepted = True
                    break
            scaled = scaled / 2.0
        if not accepted:
            break
        if np.linalg.norm(scaled) < GN_STEP_TOL:
            break
    return theta[:2]


def shape_loss(
    pred: np.ndarray, gt: np.ndarray, rows: int = 3, cols: int = 6
) -> float:
    """Mean Frobenius distance from identity of the per-patch affine fits."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"boundary maps differ: {pred.shape} vs {gt.shape}")
    grid = split_patches(pred.shape, rows=rows, cols=cols)
    total = 0.0
    for pp, gp in zip(grid.extract(pred), grid.extract(gt)):
        theta = estimate_affine(pp, gp)
        total += float(np.linalg.norm(theta - IDENTITY_2X3))
    return total / len(grid.bounds)


def bce_loss(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean binary cross entropy with predictions clamped away from {0, 1}."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"boundary maps differ: {pred.shape} vs {gt.shape}")
    if not np.isin(gt, (0.0, 1.0)).all():
        raise ValueError("ground-truth edge map must be binary")
    p = np.clip(pred, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(gt * np.log(p) + (1.0 - gt) * np.log1p(-p)))


def total_loss(align: float, shape: float, bce: float, hp: HyperParams) -> float:
    """Weighted sum of the three loss components."""
    out = align + hp.lambda1 * shape + hp.lambda2 * bce
    if not np.isfinite(out):
        raise NonFiniteError(
            f"non-finite total loss from ({align}, {shape}, {bce})"
        )
    return float(out)
