"""Edge extraction, patch tiling, affine estimation, boundary losses."""

import math

import numpy as np
import pytest

from spectraseg.boundary import (
    IDENTITY_2X3,
    bce_loss,
    estimate_affine,
    mask_to_edges,
    shape_loss,
    sobel,
    split_patches,
    total_loss,
)
from spectraseg.errors import NonFiniteError, ShapeMismatch, TooSmall
from spectraseg.params import HyperParams

KX = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])


def _sobel_oracle(field):
    # direct double-precision convolution with replicate padding
    h, w = field.shape
    p = np.pad(field, 1, mode="edge")
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            win = p[i : i + 3, j : j + 3]
            gx = float((win * KX).sum())
            gy = float((win * KX.T).sum())
            out[i, j] = math.sqrt(gx * gx + gy * gy)
    peak = out.max()
    return out / peak if peak > 0 else out


def test_sobel_constant_and_errors():
    assert np.all(sobel(np.full((5, 7), 3.25)) == 0.0)
    with pytest.raises(TooSmall):
        sobel(np.zeros((2, 5)))
    with pytest.raises(TooSmall):
        sobel(np.zeros((5, 2)))
    with pytest.raises(NonFiniteError):
        sobel(np.full((4, 4), np.nan))


def test_sobel_vertical_step():
    field = np.zeros((5, 8))
    field[:, 4:] = 1.0
    mag = sobel(field)
    # response confined to the two columns adjacent to the step
    assert np.all(mag[:, :3] == 0.0)
    assert np.all(mag[:, 6:] == 0.0)
    assert np.all(mag[:, 3:5] > 0.0)
    # interior rows see the full kernel weight, normalized to 1
    assert np.allclose(mag[1:-1, 3:5], 1.0)
    assert np.array_equal(mag, _sobel_oracle(field))


def test_sobel_random_vs_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        field = rng.uniform(-2.0, 2.0, (int(rng.integers(3, 12)), int(rng.integers(3, 12))))
        assert np.abs(sobel(field) - _sobel_oracle(field)).max() <= 1e-6


def test_sobel_flip_symmetry():
    rng = np.random.default_rng(1)
    field = rng.standard_normal((9, 13))
    assert np.abs(sobel(field[:, ::-1]) - sobel(field)[:, ::-1]).max() <= 1e-6


def test_mask_to_edges_cases():
    assert np.all(mask_to_edges(np.full((4, 6), 3, np.int32)) == 0.0)

    # two half-planes: both sides of the split are edges, nothing else
    halves = np.zeros((5, 8), np.int32)
    halves[:, 4:] = 1
    edges = mask_to_edges(halves)
    expected = np.zeros((5, 8))
    expected[:, 3:5] = 1.0
    assert np.array_equal(edges, expected)

    # single-pixel object: the pixel and its 8-neighbourhood ring
    single = np.zeros((5, 5), np.int32)
    single[2, 2] = 7
    edges = mask_to_edges(single)
    expected = np.zeros((5, 5))
    expected[1:4, 1:4] = 1.0
    assert np.array_equal(edges, expected)


def test_mask_to_edges_ignore_and_relabel_invariance():
    rng = np.random.default_rng(2)
    gt = rng.integers(0, 4, (10, 12)).astype(np.int32)
    gt[3:5, :] = 255
    edges = mask_to_edges(gt)
    assert np.all(edges[3:5, :] == 0.0)  # ignored pixels are never edges

    # an ignored strip does not witness a difference across itself
    strip = np.zeros((5, 3), np.int32)
    strip[2, :] = 255
    strip[3:, :] = 1
    assert np.all(mask_to_edges(strip)[:2] == 0.0)

    # invariant under any label permutation
    perm = rng.permutation(256).astype(np.int32)
    perm_inv_255 = perm.copy()
    # keep the ignore sentinel fixed so it stays the sentinel
    swap = int(np.where(perm == 255)[0][0])
    perm_inv_255[swap], perm_inv_255[255] = perm_inv_255[255], 255
    relabeled = perm_inv_255[gt]
    assert np.array_equal(mask_to_edges(relabeled), edges)


def test_split_patches_shapes():
    grid = split_patches((6, 12))
    assert len(grid.bounds) == 18
    assert all((r1 - r0, c1 - c0) == (2, 2) for r0, r1, c0, c1 in grid.bounds)

    grid = split_patches((7, 13))
    heights = {grid.bounds[r * 6][1] - grid.bounds[r * 6][0] for r in range(3)}
    widths = {grid.bounds[c][3] - grid.bounds[c][2] for c in range(6)}
    assert heights == {2, 3} and grid.bounds[-1][1] - grid.bounds[-1][0] == 3
    assert widths == {2, 3} and grid.bounds[-1][3] - grid.bounds[-1][2] == 3

    with pytest.raises(TooSmall):
        split_patches((2, 12))
    with pytest.raises(TooSmall):
        split_patches((6, 5))


def test_split_patches_tiling():
    rng = np.random.default_rng(3)
    for _ in range(10):
        h = int(rng.integers(3, 40))
        w = int(rng.integers(6, 40))
        grid = split_patches((h, w))
        cover = np.zeros((h, w), dtype=np.int32)
        for r0, r1, c0, c1 in grid.bounds:
            cover[r0:r1, c0:c1] += 1
        assert np.all(cover == 1)  # disjoint and complete


def _blob(h, w, cx, cy, sigma=4.0):
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    return np.exp(-(((xx - cx) / sigma) ** 2 + ((yy - cy) / sigma) ** 2))


def _warp(img, theta):
    h, w = img.shape
    xs = np.linspace(-1.0, 1.0, w)
    ys = np.linspace(-1.0, 1.0, h)
    gx, gy = np.meshgrid(xs, ys)
    xw = theta[0, 0] * gx + theta[0, 1] * gy + theta[0, 2]
    yw = theta[1, 0] * gx + theta[1, 1] * gy + theta[1, 2]
    from spectraseg._kernels import bilinear_sample

    cols = (xw.ravel() + 1.0) * (w - 1) / 2.0
    rows = (yw.ravel() + 1.0) * (h - 1) / 2.0
    return bilinear_sample(np.ascontiguousarray(img), cols, rows).reshape(h, w)


def test_estimate_affine_identity_fixed_point():
    patch = _blob(16, 16, 8.0, 7.0)
    theta = estimate_affine(patch, patch)
    assert np.abs(theta - IDENTITY_2X3).max() < 1e-6


def test_estimate_affine_recovers_translation():
    gt = _blob(32, 32, 15.5, 15.5)
    pred = _blob(32, 32, 17.5, 15.5)  # 2 px right
    theta = estimate_affine(pred, gt)
    expected_tx = 2.0 * 2.0 / 31.0  # px to normalized units
    tol = 0.2 * 2.0 / 31.0  # 0.2 px in normalized units
    assert abs(theta[0, 2] - expected_tx) < tol
    assert abs(theta[1, 2]) < tol
    # recovered warp maps pred onto gt: SSD below 1% of the initial SSD
    initial = float(((pred - gt) ** 2).sum())
    warped = _warp(pred, theta)
    assert float(((warped - gt) ** 2).sum()) < 0.01 * initial


def test_estimate_affine_degenerate_and_errors():
    zero = np.zeros((8, 8))
    assert np.array_equal(estimate_affine(zero, zero), IDENTITY_2X3)
    assert np.array_equal(estimate_affine(zero, _blob(8, 8, 4, 4)), IDENTITY_2X3)
    with pytest.raises(ShapeMismatch):
        estimate_affine(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(NonFiniteError):
        estimate_affine(np.full((4, 4), np.nan), np.ones((4, 4)))


def test_shape_loss_fixed_point_and_monotone_shift():
    rng = np.random.default_rng(4)
    for _ in range(5):
        field = rng.uniform(0.0, 1.0, (12, 18))
        assert shape_loss(field, field) <= 1e-5

    # translation sweep on a blob field, crops of a wider canvas
    h, w, pad = 48, 96, 8
    yy, xx = np.mgrid[0:h, 0 : w + 2 * pad].astype(float)
    big = np.zeros((h, w + 2 * pad))
    for _ in range(8):
        cy, cx = rng.uniform(6, h - 6), rng.uniform(6, w + 2 * pad - 6)
        sig = rng.uniform(6.0, 10.0)
        big += np.exp(-(((xx - cx) / sig) ** 2 + ((yy - cy) / sig) ** 2))
    big /= big.max()
    gt = big[:, pad : pad + w]
    losses = [shape_loss(big[:, pad - s : pad - s + w], gt) for s in (1, 2, 4)]
    assert losses[0] > 0.0
    assert losses[0] <= losses[1] <= losses[2]

    with pytest.raises(ShapeMismatch):
        shape_loss(np.zeros((6, 12)), np.zeros((6, 13)))


def test_bce_loss():
    rng = np.random.default_rng(5)
    gt = (rng.random((9, 11)) < 0.3).astype(np.float64)

    assert bce_loss(gt, gt) < 1e-6  # clamped perfect prediction
    half = np.full(gt.shape, 0.5)
    assert abs(bce_loss(half, gt) - math.log(2.0)) < 1e-12

    pred = rng.random(gt.shape)
    clamped = np.clip(pred, 1e-7, 1 - 1e-7)
    oracle = 0.0
    for g, p in zip(gt.ravel(), clamped.ravel()):
        oracle += -(g * math.log(p) + (1 - g) * math.log(1 - p))
    oracle /= gt.size
    assert abs(bce_loss(pred, gt) - oracle) <= 1e-8

    with pytest.raises(ValueError):
        bce_loss(pred, gt * 0.5)
    with pytest.raises(ShapeMismatch):
        bce_loss(np.zeros((2, 2)), np.zeros((2, 3)))


def test_bce_constant_minimizer_at_mean():
    rng = np.random.default_rng(6)
    gt = (rng.random((16, 16)) < 0.37).astype(np.float64)
    grid = np.linspace(0.01, 0.99, 99)
    losses = [bce_loss(np.full(gt.shape, p), gt) for p in grid]
    best = grid[int(np.argmin(losses))]
    assert abs(best - gt.mean()) <= 0.011  # within one grid step


def test_total_loss():
    hp0 = HyperParams(lambda1=0.0, lambda2=0.0)
    assert total_loss(1.0, 2.0, 3.0, hp0) == 1.0
    hp = HyperParams(lambda1=0.1, lambda2=1.0)
    assert abs(total_loss(1.0, 2.0, 3.0, hp) - 4.2) < 1e-12
    # linear in the shape component
    assert abs(
        (total_loss(1.0, 2.0, 3.0, hp) - total_loss(1.0, 0.0, 3.0, hp)) - 0.1 * 2.0
    ) < 1e-12
    with pytest.raises(NonFiniteError):
        total_loss(float("nan"), 0.0, 0.0, hp)
