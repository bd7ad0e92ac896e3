"""Compare the compiled kernels against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on a fixed seeded workload; the table reports the best of
``repeat`` timings per backend plus the native speedup. The script also
asserts bit-identical outputs, so it doubles as a quick parity check.
"""

import argparse
import time

import numpy as np

from spectraseg._kernels import _python

try:
    from spectraseg._kernels import _native
except ImportError:
    _native = None


def _bench(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    field = np.ascontiguousarray(rng.uniform(-1, 1, (512, 512)))
    coords = np.ascontiguousarray(rng.uniform(0, 1, (4096, 6)))
    img = np.ascontiguousarray(rng.uniform(0, 1, (256, 256)))
    xs = rng.uniform(-10, 266, 250_000)
    ys = rng.uniform(-10, 266, 250_000)
    mask = (rng.random((1024, 1024)) < 0.4).astype(np.uint8)

    workloads = [
        ("sobel_magnitude 512x512", "sobel_magnitude", (field,)),
        ("knn_edges n=4096 k=8", "knn_edges", (coords, 8)),
        ("bilinear_sample 250k pts", "bilinear_sample", (img, xs, ys)),
        ("crack_perimeter 1024^2", "crack_perimeter", (mask,)),
    ]

    print(f"{'kernel':<28} {'python':>10} {'native':>10} {'speedup':>8}")
    for label, name, call_args in workloads:
        py_time, py_out = _bench(getattr(_python, name), call_args, args.repeat)
        if _native is None:
            print(f"{label:<28} {py_time * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
            continue
        nat_time, nat_out = _bench(getattr(_native, name), call_args, args.repeat)
        if isinstance(py_out, tuple):
            matches = all(np.array_equal(a, b) for a, b in zip(py_out, nat_out))
        else:
            matches = np.array_equal(py_out, nat_out)
        if not matches:
            raise SystemExit(f"{name}: backend outputs differ")
        print(
            f"{label:<28} {py_time * 1e3:>8.2f}ms {nat_time * 1e3:>8.2f}ms "
            f"{py_time / nat_time:>7.1f}x"
        )
    if _native is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
