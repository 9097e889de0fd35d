#!/usr/bin/env python3
"""Time the numba and pure-numpy kernels side by side.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends must agree
bit for bit; the script stops if they do not.
"""
import argparse
import time

import numpy as np

from mbvlgc import kernels
from mbvlgc._accel import HAVE_NUMBA
from mbvlgc.filters import EEG_BANDS, design_butterworth_bandpass


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(u, v) for u, v in zip(a, b))
    return np.array_equal(a, b)


def run(label, make_call, sizes, repeat):
    print(f"\n{label}")
    print(f"{'n':>7}  {'numpy (s)':>10}  {'numba (s)':>10}  {'speedup':>8}")
    print("-" * 42)
    for n in sizes:
        call = make_call(n)
        with kernels.backend("numpy"):
            t_np, ref = best_of(call, repeat)
        with kernels.backend("numba"):
            call()  # compile outside the timed region
            t_nb, out = best_of(call, repeat)
        if not same(ref, out):
            raise SystemExit(f"backends disagree for {label} at n={n}")
        print(f"{n:>7}  {t_np:>10.4f}  {t_nb:>10.4f}  {t_np / t_nb:>7.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    sizes = [250, 500] if args.quick else [250, 500, 1000, 2000]

    def dtw_call(n):
        x, y = rng.normal(size=n), rng.normal(size=n)
        return lambda: kernels.dtw_band(x, y, 50)

    sos = np.array(design_butterworth_bandpass(EEG_BANDS[2], 250.0).sos)

    def sosfilt_call(n):
        x = rng.normal(size=n * 20)
        zi = np.zeros((sos.shape[0], 2))
        return lambda: kernels.sosfilt(sos, x, zi)

    run("banded DTW (window 50)", dtw_call, sizes, args.repeat)
    run("sosfilt, order-4 bandpass (n x 20 samples)", sosfilt_call, sizes, args.repeat)


if __name__ == "__main__":
    main()
