"""Differentiable operations recorded on the active tape.

All ops take and return :class:`~slukit.tape.Tensor`. When no record is
active they only compute values (numpy forward, no bookkeeping), which is
how evaluation and finite-difference passes run.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError
from .kernels.py_kernels import _sigmoid
from .tape import Tensor, active_record

PROB_FLOOR = 1e-12


def _result(data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    rec = active_record()
    if rec is None:
        return Tensor(data)
    ids = tuple(rec.node_for(t) for t in inputs)
    return Tensor(data, rec, rec.add_node(backward_fn, ids))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def constant(data) -> Tensor:
    return Tensor(np.asarray(data, dtype=np.float64))


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape))


# ---------------------------------------------------------------------------
# Linear algebra


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(f"matmul shapes incompatible: {a.data.shape} x {b.data.shape}")
    out = a.data @ b.data

    def bwd(g):
        return g @ b.data.T, a.data.T @ g

    return _result(out, (a, b), bwd)


def matvec(m: Tensor, v: Tensor) -> Tensor:
    if m.data.ndim != 2 or v.data.ndim != 1 or m.data.shape[1] != v.data.shape[0]:
        raise DimensionError(f"matvec shapes incompatible: {m.data.shape} x {v.data.shape}")
    out = m.data @ v.data

    def bwd(g):
        return np.outer(g, v.data), m.data.T @ g

    return _result(out, (m, v), bwd)


def vecmat(v: Tensor, m: Tensor) -> Tensor:
    if v.data.ndim != 1 or m.data.ndim != 2 or v.data.shape[0] != m.data.shape[0]:
        raise DimensionError(f"vecmat shapes incompatible: {v.data.shape} x {m.data.shape}")
    out = v.data @ m.data

    def bwd(g):
        return m.data @ g, np.outer(v.data, g)

    return _result(out, (v, m), bwd)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {x.data.shape}")
    return _result(x.data.T.copy(), (x,), lambda g: (g.T,))


# ---------------------------------------------------------------------------
# Elementwise


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data

    def bwd(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _result(out, (a, b), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data

    def bwd(g):
        return _unbroadcast(g * b.data, a.data.shape), _unbroadcast(g * a.data, b.data.shape)

    return _result(out, (a, b), bwd)


def scale(x: Tensor, s: float) -> Tensor:
    return _result(x.data * s, (x,), lambda g: (g * s,))


def mul_const(x: Tensor, arr: np.ndarray) -> Tensor:
    """Elementwise product with a non-differentiable constant (dropout masks)."""
    if arr.shape != x.data.shape:
        raise DimensionError(f"mask shape {arr.shape} != tensor shape {x.data.shape}")
    return _result(x.data * arr, (x,), lambda g: (g * arr,))


def add_n(tensors: list[Tensor]) -> Tensor:
    if not tensors:
        raise DomainError("add_n of an empty list")
    shape = tensors[0].data.shape
    for t in tensors[1:]:
        if t.data.shape != shape:
            raise DimensionError(f"add_n shape mismatch: {shape} vs {t.data.shape}")
    out = tensors[0].data.copy()
    for t in tensors[1:]:
        out += t.data
    n = len(tensors)
    return _result(out, tuple(tensors), lambda g: (g,) * n)


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(np.asarray(x.data, dtype=np.float64))
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),))


def softmax(x: Tensor) -> Tensor:
    """Softmax along the last axis (rows of a matrix, whole of a vector)."""
    if x.data.size == 0:
        raise DomainError("softmax of an empty tensor")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def bwd(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _result(y, (x,), bwd)


# ---------------------------------------------------------------------------
# Shape manipulation


def reshape(x: Tensor, shape) -> Tensor:
    out = x.data.reshape(shape)
    return _result(out, (x,), lambda g: (g.reshape(x.data.shape),))


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise DomainError("concat of an empty list")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]

    def bwd(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _result(out, tuple(tensors), bwd)


def stack_rows(vectors: list[Tensor]) -> Tensor:
    if not vectors:
        raise DomainError("stack_rows of an empty list")
    for v in vectors:
        if v.data.ndim != 1 or v.data.shape != vectors[0].data.shape:
            raise DimensionError("stack_rows expects 1-D tensors of equal length")
    out = np.stack([v.data for v in vectors])

    def bwd(g):
        return tuple(g[k] for k in range(len(vectors)))

    return _result(out, tuple(vectors), bwd)


def row(x: Tensor, i: int) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"row expects a matrix, got shape {x.data.shape}")
    if not 0 <= i < x.data.shape[0]:
        raise IndexError(f"row {i} out of range for shape {x.data.shape}")

    def bwd(g):
        z = np.zeros_like(x.data)
        z[i] = g
        return (z,)

    return _result(x.data[i].copy(), (x,), bwd)


def repeat_row(v: Tensor, times: int) -> Tensor:
    if v.data.ndim != 1:
        raise DimensionError(f"repeat_row expects a vector, got shape {v.data.shape}")
    out = np.tile(v.data, (times, 1))
    return _result(out, (v,), lambda g: (g.sum(axis=0),))


def mean_rows(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise DimensionError(f"mean_rows expects a matrix, got shape {x.data.shape}")
    k = x.data.shape[0]
    return _result(x.data.mean(axis=0), (x,), lambda g: (np.tile(g / k, (k, 1)),))


def sum_all(x: Tensor) -> Tensor:
    out = np.asarray(x.data.sum())
    return _result(out, (x,), lambda g: (np.broadcast_to(g, x.data.shape).copy(),))


# ---------------------------------------------------------------------------
# Embeddings


def embedding_lookup(table: Tensor, index: int) -> Tensor:
    if table.data.ndim != 2:
        raise DimensionError(f"embedding table must be a matrix, got {table.data.shape}")
    if not 0 <= index < table.data.shape[0]:
        raise IndexError(f"embedding index {index} out of range [0, {table.data.shape[0]})")

    def bwd(g):
        z = np.zeros_like(table.data)
        z[index] = g
        return (z,)

    return _result(table.data[index].copy(), (table,), bwd)


def embedding_rows(table: Tensor, indices) -> Tensor:
    if table.data.ndim != 2:
        raise DimensionError(f"embedding table must be a matrix, got {table.data.shape}")
    idx = list(indices)
    n_rows = table.data.shape[0]
    for i in idx:
        if not 0 <= i < n_rows:
            raise IndexError(f"embedding index {i} out of range [0, {n_rows})")

    def bwd(g):
        z = np.zeros_like(table.data)
        np.add.at(z, idx, g)
        return (z,)

    return _result(table.data[idx], (table,), bwd)


# ---------------------------------------------------------------------------
# Losses


def cross_entropy(probs: Tensor, gold: int) -> Tensor:
    """Negative log probability of the gold class, floored at PROB_FLOOR."""
    if probs.data.ndim != 1:
        raise DimensionError(f"cross_entropy expects a vector, got shape {probs.data.shape}")
    if not 0 <= gold < probs.data.shape[0]:
        raise IndexError(f"gold class {gold} out of range [0, {probs.data.shape[0]})")
    p = probs.data[gold]
    floored = max(p, PROB_FLOOR)
    out = np.asarray(-math.log(floored))

    def bwd(g):
        z = np.zeros_like(probs.data)
        if p >= PROB_FLOOR:
            z[gold] = -float(g) / floored
        return (z,)

    return _result(out, (probs,), bwd)


def sequence_cross_entropy(probs: Tensor, golds) -> Tensor:
    """Sum of per-row cross-entropies for a (T, n) probability matrix."""
    gold_ids = list(golds)
    if probs.data.ndim != 2 or probs.data.shape[0] != len(gold_ids):
        raise DimensionError(
            f"sequence_cross_entropy: probs shape {probs.data.shape} vs {len(gold_ids)} labels"
        )
    n = probs.data.shape[1]
    for gid in gold_ids:
        if not 0 <= gid < n:
            raise IndexError(f"gold class {gid} out of range [0, {n})")
    rows = np.arange(len(gold_ids))
    p = probs.data[rows, gold_ids]
    floored = np.maximum(p, PROB_FLOOR)
    out = np.asarray(-np.log(floored).sum())

    def bwd(g):
        z = np.zeros_like(probs.data)
        live = p >= PROB_FLOOR
        z[rows[live], np.asarray(gold_ids)[live]] = -float(g) / floored[live]
        return (z,)

    return _result(out, (probs,), bwd)


# ---------------------------------------------------------------------------
# LSTM


def _check_lstm_shapes(params, d_in: int) -> int:
    hidden = params.hidden_size
    if params.w.data.shape != (4 * hidden, d_in):
        raise DimensionError(
            f"lstm input weights {params.w.data.shape} incompatible with input dim {d_in}"
        )
    return hidden


def lstm_sequence(params, x: Tensor, reverse: bool = False) -> Tensor:
    """Run an LSTM over ``x`` (T, d_in) from a zero initial state.

    Returns the (T, hidden) hidden-state matrix aligned with input positions;
    with ``reverse=True`` the sequence is processed last-to-first and the
    output row t still corresponds to input row t.
    """
    if x.data.ndim != 2:
        raise DimensionError(f"lstm_sequence expects a (T, d_in) matrix, got {x.data.shape}")
    hidden = _check_lstm_shapes(params, x.data.shape[1])
    h0 = np.zeros(hidden)
    c0 = np.zeros(hidden)
    xd = np.ascontiguousarray(x.data[::-1]) if reverse else np.ascontiguousarray(x.data)
    h_seq, c_seq, gates = kernels.lstm_forward(params.w.data, params.r.data, params.b.data, xd, h0, c0)
    out = h_seq[::-1].copy() if reverse else h_seq

    def bwd(g):
        dh = np.ascontiguousarray(g[::-1]) if reverse else np.ascontiguousarray(g)
        dw, dr, db, dx, _, _ = kernels.lstm_backward(
            params.w.data, params.r.data, xd, h0, c0, h_seq, c_seq, gates, dh, np.zeros(hidden)
        )
        return dw, dr, db, (dx[::-1].copy() if reverse else dx)

    return _result(out, (params.w, params.r, params.b, x), bwd)


def lstm_step(params, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
    """One gated update: returns (h', c'), both differentiable through
    parameters, input and state."""
    h, c = state
    if x.data.ndim != 1:
        raise DimensionError(f"lstm_step expects a vector input, got shape {x.data.shape}")
    hidden = _check_lstm_shapes(params, x.data.shape[0])
    if h.data.shape != (hidden,) or c.data.shape != (hidden,):
        raise DimensionError(
            f"lstm_step state shapes {h.data.shape}/{c.data.shape} != ({hidden},)"
        )
    xd = np.ascontiguousarray(x.data[None, :])
    h_seq, c_seq, gates = kernels.lstm_forward(
        params.w.data, params.r.data, params.b.data, xd, h.data, c.data
    )

    def make_bwd(seed_h: bool):
        def bwd(g):
            dh_seq = g[None, :] if seed_h else np.zeros((1, hidden))
            dc_final = np.zeros(hidden) if seed_h else np.asarray(g, dtype=np.float64)
            dw, dr, db, dx, dh0, dc0 = kernels.lstm_backward(
                params.w.data, params.r.data, xd, h.data, c.data,
                h_seq, c_seq, gates, np.ascontiguousarray(dh_seq), dc_final,
            )
            return dw, dr, db, dx[0], dh0, dc0

        return bwd

    inputs = (params.w, params.r, params.b, x, h, c)
    h_out = _result(h_seq[0].copy(), inputs, make_bwd(True))
    c_out = _result(c_seq[0].copy(), inputs, make_bwd(False))
    return h_out, c_out
