"""Hot numeric kernels: fused LSTM sequence forward and backward passes.

Both kernels are written in nopython-compatible numpy so the same source
can run jitted (numba) or plain.  The active pair is chosen at import time:
numba is used when importable unless the environment variable
``NOISYLAB_NUMBA=0`` forces the pure-numpy path.  ``benchmarks/bench_kernels.py``
compares the two.

Gate layout along the last axis of the packed weight matrices is
(input, forget, cell, output), each block of width H.  Literal constants
go through a dtype-typed scalar so the float32 specialization stays
float32 under numba.
"""

import os

import numpy as np

try:
    import numba
except ImportError:
    numba = None

USE_NUMBA = numba is not None and os.environ.get("NOISYLAB_NUMBA", "1") != "0"


def _lstm_forward(x, w_in, w_rec, bias):
    """Run an LSTM over x (B, T, E), scanning left to right.

    Returns h_all, c_all, tanh_c_all (each (B, T, H)) and the post-activation
    gates (B, T, 4H); the extra arrays are caches for the backward pass.
    """
    B, T, _ = x.shape
    H = w_rec.shape[0]
    one = np.ones(1, x.dtype)[0]
    h_all = np.zeros((B, T, H), x.dtype)
    c_all = np.zeros((B, T, H), x.dtype)
    tc_all = np.zeros((B, T, H), x.dtype)
    gates = np.zeros((B, T, 4 * H), x.dtype)
    h = np.zeros((B, H), x.dtype)
    c = np.zeros((B, H), x.dtype)
    for t in range(T):
        xt = np.ascontiguousarray(x[:, t, :])
        a = np.dot(xt, w_in) + np.dot(h, w_rec) + bias
        gi = one / (one + np.exp(-a[:, :H]))
        gf = one / (one + np.exp(-a[:, H:2 * H]))
        gc = np.tanh(a[:, 2 * H:3 * H])
        go = one / (one + np.exp(-a[:, 3 * H:]))
        c = gf * c + gi * gc
        tc = np.tanh(c)
        h = go * tc
        gates[:, t, :H] = gi
        gates[:, t, H:2 * H] = gf
        gates[:, t, 2 * H:3 * H] = gc
        gates[:, t, 3 * H:] = go
        c_all[:, t, :] = c
        tc_all[:, t, :] = tc
        h_all[:, t, :] = h
    return h_all, c_all, tc_all, gates


def _lstm_backward(x, w_in, w_rec, h_all, c_all, tc_all, gates, dh_all, need_dx):
    """Backpropagate dh_all (B, T, H) through the scan of ``_lstm_forward``.

    Returns (dx, dw_in, dw_rec, dbias).  dx is all-zero when need_dx is
    False; the caller skips it in that case.
    """
    B, T, E = x.shape
    H = w_rec.shape[0]
    one = np.ones(1, x.dtype)[0]
    dw_in = np.zeros_like(w_in)
    dw_rec = np.zeros_like(w_rec)
    dbias = np.zeros(4 * H, x.dtype)
    dx = np.zeros((B, T, E), x.dtype)
    dh_next = np.zeros((B, H), x.dtype)
    dc_next = np.zeros((B, H), x.dtype)
    da = np.zeros((B, 4 * H), x.dtype)
    w_in_t = np.ascontiguousarray(w_in.T)
    w_rec_t = np.ascontiguousarray(w_rec.T)
    for t in range(T - 1, -1, -1):
        gi = gates[:, t, :H]
        gf = gates[:, t, H:2 * H]
        gc = gates[:, t, 2 * H:3 * H]
        go = gates[:, t, 3 * H:]
        tc = tc_all[:, t, :]
        dh = dh_all[:, t, :] + dh_next
        dc = dc_next + dh * go * (one - tc * tc)
        if t > 0:
            c_prev = c_all[:, t - 1, :]
            h_prev = np.ascontiguousarray(h_all[:, t - 1, :])
        else:
            c_prev = np.zeros((B, H), x.dtype)
            h_prev = np.zeros((B, H), x.dtype)
        da[:, :H] = dc * gc * gi * (one - gi)
        da[:, H:2 * H] = dc * c_prev * gf * (one - gf)
        da[:, 2 * H:3 * H] = dc * gi * (one - gc * gc)
        da[:, 3 * H:] = dh * tc * go * (one - go)
        xt = np.ascontiguousarray(x[:, t, :])
        dw_in += np.dot(np.ascontiguousarray(xt.T), da)
        dw_rec += np.dot(np.ascontiguousarray(h_prev.T), da)
        dbias += da.sum(0)
        if need_dx:
            dx[:, t, :] = np.dot(da, w_in_t)
        dh_next = np.dot(da, w_rec_t)
        dc_next = dc * gf
    return dx, dw_in, dw_rec, dbias


lstm_forward_numpy = _lstm_forward
lstm_backward_numpy = _lstm_backward

if numba is not None:
    lstm_forward_jit = numba.njit(cache=True)(_lstm_forward)
    lstm_backward_jit = numba.njit(cache=True)(_lstm_backward)
else:
    lstm_forward_jit = None
    lstm_backward_jit = None

if USE_NUMBA:
    lstm_forward = lstm_forward_jit
    lstm_backward = lstm_backward_jit
else:
    lstm_forward = lstm_forward_numpy
    lstm_backward = lstm_backward_numpy
