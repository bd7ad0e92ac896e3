# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled twins of the hot kernels in ``_python``.

Arithmetic order matches the NumPy fallback so neighbour tie-breaking and
low-order float bits agree across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

BACKEND_NAME = "native"


def sobel_magnitude(cnp.float64_t[:, ::1] field):
    cdef Py_ssize_t h = field.shape[0]
    cdef Py_ssize_t w = field.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double gx, gy
    for i in range(h):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < h - 1 else h - 1
        for j in range(w):
            jm = j - 1 if j > 0 else 0
            jp = j + 1 if j < w - 1 else w - 1
            gx = (field[im, jp] + 2.0 * field[i, jp] + field[ip, jp]) - (
                field[im, jm] + 2.0 * field[i, jm] + field[ip, jm])
            gy = (field[ip, jm] + 2.0 * field[ip, j] + field[ip, jp]) - (
                field[im, jm] + 2.0 * field[im, j] + field[im, jp])
            out[i, j] = sqrt(gx * gx + gy * gy)
    return out_arr


def knn_edges(cnp.float64_t[:, ::1] coords, int k):
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t d = coords.shape[1]
    if k < 1 or k > n - 1:
        raise ValueError(f"need 1 <= k <= n-1, got k={k} for n={n}")
    idx_arr = np.empty((n, k), dtype=np.int64)
    dist_arr = np.empty((n, k), dtype=np.float64)
    cdef cnp.int64_t[:, ::1] idx = idx_arr
    cdef cnp.float64_t[:, ::1] dist = dist_arr
    cdef Py_ssize_t i, j, c, pos, m
    cdef double d2, t
    cdef double[::1] best_d = np.empty(k, dtype=np.float64)
    cdef cnp.int64_t[::1] best_j = np.empty(k, dtype=np.int64)
    cdef double INF = np.inf

    for i in range(n):
        for c in range(k):
            best_d[c] = INF
            best_j[c] = -1
        for j in range(n):
            if j == i:
                continue
            d2 = 0.0
            for c in range(d):
                t = coords[i, c] - coords[j, c]
                d2 += t * t
            if d2 >= best_d[k - 1]:
                continue
            # insertion keeping earlier (lower-index) entries ahead of ties
            pos = k - 1
            while pos > 0 and best_d[pos - 1] > d2:
                pos -= 1
            for m in range(k - 1, pos, -1):
                best_d[m] = best_d[m - 1]
                best_j[m] = best_j[m - 1]
            best_d[pos] = d2
            best_j[pos] = j
        for c in range(k):
            idx[i, c] = best_j[c]
            dist[i, c] = sqrt(best_d[c])
    return idx_arr, dist_arr


def bilinear_sample(cnp.float64_t[:, ::1] img,
                    cnp.float64_t[::1] xs,
                    cnp.float64_t[::1] ys):
    cdef Py_ssize_t h = img.shape[0]
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.zeros(m, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef Py_ssize_t p
    cdef long x0, y0, xi, yi, dx, dy
    cdef double fx, fy, acc, wgt
    for p in range(m):
        x0 = <long>floor(xs[p])
        y0 = <long>floor(ys[p])
        fx = xs[p] - x0
        fy = ys[p] - y0
        acc = 0.0
        for dy in range(2):
            yi = y0 + dy
            if yi < 0 or yi >= h:
                continue
            for dx in range(2):
                xi = x0 + dx
                if xi < 0 or xi >= w:
                    continue
                wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
                acc += wgt * img[yi, xi]
        out[p] = acc
    return out_arr


def crack_perimeter(cnp.uint8_t[:, ::1] mask):
    cdef Py_ssize_t h = mask.shape[0]
    cdef Py_ssize_t w = mask.shape[1]
    cdef Py_ssize_t i, j
    cdef long total = 0
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            if i == 0 or not mask[i - 1, j]:
                total += 1
            if i == h - 1 or not mask[i + 1, j]:
                total += 1
            if j == 0 or not mask[i, j - 1]:
                total += 1
            if j == w - 1 or not mask[i, j + 1]:
                total += 1
    return total
