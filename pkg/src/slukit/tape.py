"""Reverse-mode automatic differentiation over dense float64 tensors.

A :class:`Record` is an append-only tape of operations. Ops (see
:mod:`slukit.ops`) record themselves on the active record, if any; with no
active record they just compute values, which keeps evaluation passes free
of tape overhead. :func:`backward` walks the tape once in reverse and
accumulates gradients per node.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import DomainError, StateError


class Tensor:
    """Dense float64 array plus an optional handle into a computation record."""

    __slots__ = ("data", "record", "node_id")

    def __init__(self, data, record: "Record | None" = None, node_id: int | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.record = record
        self.node_id = node_id

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self._not_scalar()

    def _not_scalar(self):
        raise DomainError(f"expected a scalar tensor, got shape {self.data.shape}")

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, recorded={self.node_id is not None})"


class Record:
    """Computation record: topologically ordered nodes plus, after backward,
    a node_id -> gradient map."""

    __slots__ = ("_entries", "_leaf_ids", "_leaf_tensors", "gradients", "_sealed")

    def __init__(self):
        # each entry: (backward_fn | None for leaves, tuple of input node ids)
        self._entries: list[tuple] = []
        self._leaf_ids: dict[int, int] = {}
        self._leaf_tensors: list[Tensor] = []
        self.gradients: dict[int, np.ndarray] = {}
        self._sealed = False

    def __len__(self) -> int:
        return len(self._entries)

    def add_node(self, backward_fn, input_ids: tuple[int, ...]) -> int:
        if self._sealed:
            raise StateError("record is sealed: backward() has already run")
        self._entries.append((backward_fn, input_ids))
        return len(self._entries) - 1

    def node_for(self, tensor: Tensor) -> int:
        """Node id of ``tensor`` on this record, registering a leaf if new."""
        if tensor.record is self and tensor.node_id is not None:
            return tensor.node_id
        key = id(tensor)
        nid = self._leaf_ids.get(key)
        if nid is None:
            nid = self.add_node(None, ())
            self._leaf_ids[key] = nid
            self._leaf_tensors.append(tensor)  # keep alive so id() stays unique
        return nid

    def grad(self, tensor: Tensor) -> np.ndarray | None:
        """Gradient of the backward root w.r.t. ``tensor`` (None if unreached)."""
        if tensor.record is self and tensor.node_id is not None:
            return self.gradients.get(tensor.node_id)
        nid = self._leaf_ids.get(id(tensor))
        return None if nid is None else self.gradients.get(nid)


_ACTIVE: Record | None = None


def active_record() -> Record | None:
    return _ACTIVE


@contextmanager
def recording(record: Record | None = None):
    """Make ``record`` (or a fresh one) the active record for ops run inside."""
    global _ACTIVE
    if _ACTIVE is not None:
        raise StateError("a computation record is already active")
    rec = record if record is not None else Record()
    _ACTIVE = rec
    try:
        yield rec
    finally:
        _ACTIVE = None


def backward(root: Tensor) -> dict[int, np.ndarray]:
    """Propagate gradients from a scalar ``root`` through its record.

    Returns the node_id -> gradient map (also stored on the record). The
    record is sealed afterwards: recording further ops or running backward
    again raises StateError.
    """
    rec = root.record
    if rec is None or root.node_id is None:
        raise StateError("root does not belong to a computation record")
    if root.data.size != 1:
        raise DomainError(f"backward root must be scalar, got shape {root.data.shape}")
    if rec._sealed:
        raise StateError("backward already ran on this record")
    rec._sealed = True

    grads: dict[int, np.ndarray] = {root.node_id: np.ones_like(root.data)}
    entries = rec._entries
    for nid in range(len(entries) - 1, -1, -1):
        g = grads.get(nid)
        if g is None:
            continue
        backward_fn, input_ids = entries[nid]
        if backward_fn is None:
            continue
        for input_id, gi in zip(input_ids, backward_fn(g)):
            if gi is None:
                continue
            acc = grads.get(input_id)
            grads[input_id] = gi if acc is None else acc + gi
    rec.gradients = grads
    return grads
