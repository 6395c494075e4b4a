"""Time the numba kernels against their numpy fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py [--size 128] [--repeat 20]

Each kernel is compiled once before timing. The script also checks that both
backends agree, so a speed-up is never reported for a wrong answer.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from twophoton import _kernels
from twophoton._accel import NUMBA_AVAILABLE


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(size, rng):
    R = C = size
    centers = rng.uniform(8, size - 8, size=(40, 2))
    amps = np.full(40, 100.0)
    ref = _kernels._render_blobs_np(R, C, centers, amps, 2.0, 0.0, 0.0, 0.0, 10.0)
    frame = _kernels._render_blobs_np(R, C, centers, amps, 2.0, 1.3, -0.7, 0.02, 10.0)
    min_valid = int(np.ceil(0.25 * R * C))
    return {
        "warp": (lambda: _kernels._warp_nb(frame, 1.3, -0.7, 0.02),
                 lambda: _kernels._warp_np(frame, 1.3, -0.7, 0.02)),
        "warp_sse": (lambda: _kernels._warp_sse_nb(frame, ref, 1.3, -0.7, 0.02),
                     lambda: _kernels._warp_sse_np(frame, ref, 1.3, -0.7, 0.02)),
        "grid_sse": (lambda: _kernels._grid_sse_nb(frame, ref, 10, min_valid),
                     lambda: _kernels._grid_sse_np(frame, ref, 10, min_valid)),
        "render_blobs": (lambda: _kernels._render_blobs_nb(R, C, centers, amps, 2.0, 1.3, -0.7, 0.02, 10.0),
                         lambda: _kernels._render_blobs_np(R, C, centers, amps, 2.0, 1.3, -0.7, 0.02, 10.0)),
    }


def _close(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rtol=1e-5, atol=1e-6, equal_nan=True)
               for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<14}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}  agree")
    for name, (nb, npy) in cases(args.size, rng).items():
        agree = _close(nb(), npy())  # first call compiles
        t_nb = _best_of(nb, args.repeat)
        t_np = _best_of(npy, args.repeat)
        print(f"{name:<14}{t_nb * 1e3:>10.3f}{t_np * 1e3:>10.3f}{t_np / t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
