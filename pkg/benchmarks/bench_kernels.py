"""Benchmark the fused LSTM kernels: numba-jitted vs pure numpy.

Usage: python3 benchmarks/bench_kernels.py

The same kernel source runs on both paths (see noisylab.kernels); this
script times forward and forward+backward at the bundled-experiment scale
and at the full-size configuration (300-dim vectors, state size 300).
"""

import time

import numpy as np

from noisylab import kernels

SIZES = (
    # (batch, window, embed dim, state size)
    (32, 7, 16, 24),
    (64, 7, 50, 100),
    (32, 7, 300, 300),
)

REPEATS = 30


def make_inputs(rng, b, t, e, h):
    x = rng.standard_normal((b, t, e))
    w_in = rng.standard_normal((e, 4 * h)) / np.sqrt(e)
    w_rec = rng.standard_normal((h, 4 * h)) / np.sqrt(h)
    bias = np.zeros(4 * h)
    return x, w_in, w_rec, bias


def time_path(forward, backward, args, dh):
    x, w_in, w_rec, bias = args
    forward(*args)  # warmup (and jit compile on the numba path)
    start = time.perf_counter()
    for _ in range(REPEATS):
        forward(*args)
    fwd = (time.perf_counter() - start) / REPEATS
    caches = forward(*args)
    backward(x, w_in, w_rec, *caches, dh, True)
    start = time.perf_counter()
    for _ in range(REPEATS):
        backward(x, w_in, w_rec, *caches, dh, True)
    bwd = (time.perf_counter() - start) / REPEATS
    return fwd, bwd


def main():
    if kernels.lstm_forward_jit is None:
        print("numba not available; only the numpy path can be timed")
    rng = np.random.default_rng(0)
    header = f"{'size (B,T,E,H)':>18} {'path':>6} {'fwd ms':>9} {'fwd+bwd ms':>11} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for size in SIZES:
        args = make_inputs(rng, *size)
        dh = rng.standard_normal((size[0], size[1], size[3]))
        np_fwd, np_bwd = time_path(
            kernels.lstm_forward_numpy, kernels.lstm_backward_numpy, args, dh)
        rows = [("numpy", np_fwd, np_bwd, 1.0)]
        if kernels.lstm_forward_jit is not None:
            jit_fwd, jit_bwd = time_path(
                kernels.lstm_forward_jit, kernels.lstm_backward_jit, args, dh)
            rows.append(("numba", jit_fwd, jit_bwd,
                         (np_fwd + np_bwd) / (jit_fwd + jit_bwd)))
        for path, fwd, bwd, speedup in rows:
            print(f"{str(size):>18} {path:>6} {1e3 * fwd:9.3f} "
                  f"{1e3 * (fwd + bwd):11.3f} {speedup:8.2f}x")


if __name__ == "__main__":
    main()
