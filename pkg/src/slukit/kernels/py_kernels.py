"""Numpy implementation of the LSTM sequence kernels.

Fallback backend for slukit.kernels: same signatures and same math as the
compiled module, vectorized over the gate dimension with a Python loop over
time steps (the recurrence cannot be batched away).

Gate layout inside the fused weight matrices/bias is [input, forget, cell,
output], each block of size ``hidden``.
"""

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(w, r, b, x, h0, c0):
    """Run an LSTM over ``x`` of shape (T, d_in).

    Returns (h_seq, c_seq, gates): hidden states (T, H), cell states (T, H)
    and the post-activation gate values (T, 4H) needed by the backward pass.
    """
    T = x.shape[0]
    H = h0.shape[0]
    h_seq = np.empty((T, H))
    c_seq = np.empty((T, H))
    gates = np.empty((T, 4 * H))
    pre_x = x @ w.T + b  # input contribution for all steps at once
    h_prev, c_prev = h0, c0
    for t in range(T):
        pre = pre_x[t] + r @ h_prev
        i = _sigmoid(pre[:H])
        f = _sigmoid(pre[H:2 * H])
        g = np.tanh(pre[2 * H:3 * H])
        o = _sigmoid(pre[3 * H:])
        c = f * c_prev + i * g
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = g
        gates[t, 3 * H:] = o
        c_seq[t] = c
        h_seq[t] = o * np.tanh(c)
        h_prev, c_prev = h_seq[t], c
    return h_seq, c_seq, gates


def lstm_backward(w, r, x, h0, c0, h_seq, c_seq, gates, dh_seq, dc_final):
    """Backward pass matching :func:`lstm_forward`.

    ``dh_seq`` holds the loss gradient w.r.t. every hidden state; ``dc_final``
    seeds the gradient w.r.t. the last cell state (zeros for sequence use,
    nonzero when a single-step caller differentiates through c').

    Returns (dw, dr, db, dx, dh0, dc0).
    """
    T, H = h_seq.shape
    dpre_all = np.empty((T, 4 * H))
    dh_rec = np.zeros(H)
    dc = dc_final.copy()
    for t in range(T - 1, -1, -1):
        i = gates[t, :H]
        f = gates[t, H:2 * H]
        g = gates[t, 2 * H:3 * H]
        o = gates[t, 3 * H:]
        c_prev = c_seq[t - 1] if t > 0 else c0
        tc = np.tanh(c_seq[t])
        dh = dh_seq[t] + dh_rec
        dc = dc + dh * o * (1.0 - tc * tc)
        do = dh * tc
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dpre = dpre_all[t]
        dpre[:H] = di * i * (1.0 - i)
        dpre[H:2 * H] = df * f * (1.0 - f)
        dpre[2 * H:3 * H] = dg * (1.0 - g * g)
        dpre[3 * H:] = do * o * (1.0 - o)
        dh_rec = dpre @ r
        dc = dc * f
    h_prev_stack = np.vstack([h0[None, :], h_seq[:-1]]) if T > 1 else h0[None, :]
    dw = dpre_all.T @ x
    dr = dpre_all.T @ h_prev_stack
    db = dpre_all.sum(axis=0)
    dx = dpre_all @ w
    return dw, dr, db, dx, dh_rec, dc
