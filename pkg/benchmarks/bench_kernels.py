#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot operations (bilinear warp through a projective map,
central-moment accumulation) on a few grid sizes and reports the speedup.

    python benchmarks/bench_kernels.py [--sizes 128 256 512] [--repeat 20]
"""

import argparse
import math
import time

import numpy as np

from geonorm._kernels import _ref

try:
    from geonorm._kernels import _core
except ImportError:
    _core = None


def make_image(n: int) -> np.ndarray:
    ax = np.linspace(-3.0, 3.0, n)
    x1, x2 = np.meshgrid(ax, ax)
    return (np.exp(-((x1 + 0.7) ** 2 + (x2 + 0.4) ** 2))
            + 0.6 * np.exp(-2.0 * ((x1 - 0.9) ** 2 + (x2 - 0.5) ** 2)))


def homography() -> np.ndarray:
    c, s = math.cos(0.3), math.sin(0.3)
    return np.array([[1.1 * c, -1.1 * s, 0.2],
                     [1.1 * s, 1.1 * c, -0.1],
                     [0.004, -0.003, 1.0]])


def time_call(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(backend, name: str, n: int, repeat: int) -> dict:
    img = make_image(n)
    pitch = 6.0 / (n - 1)
    origin = -3.0
    h = homography()
    warp = lambda: backend.warp_bilinear(  # noqa: E731
        img, origin, origin, pitch, h, origin, origin, pitch, n, n)
    sums = lambda: backend.central_moment_sums(  # noqa: E731
        img, origin, origin, pitch, 0.1, -0.2)
    return {
        "backend": name,
        "n": n,
        "warp_ms": 1e3 * time_call(warp, repeat),
        "moments_ms": 1e3 * time_call(sums, repeat),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rows = []
    for n in args.sizes:
        rows.append(bench(_ref, "numpy", n, args.repeat))
        if _core is not None:
            rows.append(bench(_core, "cython", n, args.repeat))

    print(f"{'size':>6} {'backend':>8} {'warp ms':>10} {'moments ms':>12}")
    for row in rows:
        print(f"{row['n']:>6} {row['backend']:>8} "
              f"{row['warp_ms']:>10.3f} {row['moments_ms']:>12.3f}")

    if _core is None:
        print("\ncompiled backend not available; nothing to compare")
        return
    print()
    for n in args.sizes:
        ref = next(r for r in rows if r["n"] == n and r["backend"] == "numpy")
        core = next(r for r in rows
                    if r["n"] == n and r["backend"] == "cython")
        print(f"n={n}: warp speedup {ref['warp_ms'] / core['warp_ms']:.2f}x, "
              f"moments speedup "
              f"{ref['moments_ms'] / core['moments_ms']:.2f}x")

    # Parity spot check so the benchmark doubles as a sanity harness.
    n = args.sizes[0]
    img = make_image(n)
    pitch = 6.0 / (n - 1)
    h = homography()
    out_ref, d_ref = _ref.warp_bilinear(img, -3.0, -3.0, pitch, h,
                                        -3.0, -3.0, pitch, n, n)
    out_core, d_core = _core.warp_bilinear(img, -3.0, -3.0, pitch, h,
                                           -3.0, -3.0, pitch, n, n)
    dev = float(np.abs(out_ref - out_core).max())
    print(f"\nbackend parity: warp max dev {dev:.3e}, "
          f"min denom {d_ref:.6f} vs {d_core:.6f}")


if __name__ == "__main__":
    main()
