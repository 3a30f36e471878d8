# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM sequence kernels.

Same contract as slukit.kernels.py_kernels, with the whole time loop in C.
Gate layout is [input, forget, cell, output].
"""

from libc.math cimport exp, tanh

import numpy as np


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def lstm_forward(double[:, ::1] w, double[:, ::1] r, double[::1] b,
                 double[:, ::1] x, double[::1] h0, double[::1] c0):
    """Run an LSTM over ``x`` (T, d_in); returns (h_seq, c_seq, gates)."""
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t d_in = x.shape[1]
    cdef Py_ssize_t H = h0.shape[0]
    h_seq_arr = np.empty((T, H))
    c_seq_arr = np.empty((T, H))
    gates_arr = np.empty((T, 4 * H))
    pre_arr = np.empty(4 * H)
    cdef double[:, ::1] h_seq = h_seq_arr
    cdef double[:, ::1] c_seq = c_seq_arr
    cdef double[:, ::1] gates = gates_arr
    cdef double[::1] pre = pre_arr
    cdef double[::1] h_prev, c_prev
    cdef Py_ssize_t t, k, j
    cdef double acc, i, f, g, o, c

    h_prev = h0
    c_prev = c0
    for t in range(T):
        for k in range(4 * H):
            acc = b[k]
            for j in range(d_in):
                acc += w[k, j] * x[t, j]
            for j in range(H):
                acc += r[k, j] * h_prev[j]
            pre[k] = acc
        for j in range(H):
            i = _sigmoid(pre[j])
            f = _sigmoid(pre[H + j])
            g = tanh(pre[2 * H + j])
            o = _sigmoid(pre[3 * H + j])
            c = f * c_prev[j] + i * g
            gates[t, j] = i
            gates[t, H + j] = f
            gates[t, 2 * H + j] = g
            gates[t, 3 * H + j] = o
            c_seq[t, j] = c
            h_seq[t, j] = o * tanh(c)
        h_prev = h_seq[t]
        c_prev = c_seq[t]
    return h_seq_arr, c_seq_arr, gates_arr


def lstm_backward(double[:, ::1] w, double[:, ::1] r, double[:, ::1] x,
                  double[::1] h0, double[::1] c0,
                  double[:, ::1] h_seq, double[:, ::1] c_seq,
                  double[:, ::1] gates, double[:, ::1] dh_seq,
                  double[::1] dc_final):
    """Backward pass matching lstm_forward; returns (dw, dr, db, dx, dh0, dc0)."""
    cdef Py_ssize_t T = h_seq.shape[0]
    cdef Py_ssize_t H = h_seq.shape[1]
    cdef Py_ssize_t d_in = x.shape[1]
    dw_arr = np.zeros((4 * H, d_in))
    dr_arr = np.zeros((4 * H, H))
    db_arr = np.zeros(4 * H)
    dx_arr = np.zeros((T, d_in))
    dh_rec_arr = np.zeros(H)
    dc_arr = np.array(dc_final, copy=True)
    dpre_arr = np.empty(4 * H)
    cdef double[:, ::1] dw = dw_arr
    cdef double[:, ::1] dr = dr_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] dx = dx_arr
    cdef double[::1] dh_rec = dh_rec_arr
    cdef double[::1] dc = dc_arr
    cdef double[::1] dpre = dpre_arr
    cdef double[::1] h_prev, c_prev
    cdef Py_ssize_t t, k, j
    cdef double i, f, g, o, tc, dh, dcj, do, di, df, dg, dp, acc

    for t in range(T - 1, -1, -1):
        if t > 0:
            h_prev = h_seq[t - 1]
            c_prev = c_seq[t - 1]
        else:
            h_prev = h0
            c_prev = c0
        for j in range(H):
            i = gates[t, j]
            f = gates[t, H + j]
            g = gates[t, 2 * H + j]
            o = gates[t, 3 * H + j]
            tc = tanh(c_seq[t, j])
            dh = dh_seq[t, j] + dh_rec[j]
            dcj = dc[j] + dh * o * (1.0 - tc * tc)
            do = dh * tc
            di = dcj * g
            df = dcj * c_prev[j]
            dg = dcj * i
            dpre[j] = di * i * (1.0 - i)
            dpre[H + j] = df * f * (1.0 - f)
            dpre[2 * H + j] = dg * (1.0 - g * g)
            dpre[3 * H + j] = do * o * (1.0 - o)
            dc[j] = dcj * f
        for k in range(4 * H):
            dp = dpre[k]
            db[k] += dp
            for j in range(d_in):
                dw[k, j] += dp * x[t, j]
                dx[t, j] += dp * w[k, j]
            for j in range(H):
                dr[k, j] += dp * h_prev[j]
        for j in range(H):
            acc = 0.0
            for k in range(4 * H):
                acc += dpre[k] * r[k, j]
            dh_rec[j] = acc
    return dw_arr, dr_arr, db_arr, dx_arr, dh_rec_arr, dc_arr
