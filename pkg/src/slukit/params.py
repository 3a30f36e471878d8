"""Named trainable tensors and their initialization.

Matrices are initialized uniform(-r, r) with r = sqrt(6 / (fan_in + fan_out));
biases start at zero except the LSTM forget-gate block, which starts at 1.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, StateError
from .tape import Record, Tensor


class LstmParams:
    """Fused gate parameters for one LSTM direction.

    ``w`` is (4*hidden, input_dim), ``r`` is (4*hidden, hidden), ``b`` has
    length 4*hidden; gate order is [input, forget, cell, output].
    """

    __slots__ = ("w", "r", "b", "hidden_size")

    def __init__(self, w: Tensor, r: Tensor, b: Tensor, hidden_size: int):
        if hidden_size <= 0:
            raise DimensionError(f"hidden_size must be positive, got {hidden_size}")
        if w.data.ndim != 2 or w.data.shape[0] != 4 * hidden_size:
            raise DimensionError(f"input weights {w.data.shape} != (4*{hidden_size}, input_dim)")
        if r.data.shape != (4 * hidden_size, hidden_size):
            raise DimensionError(f"recurrent weights {r.data.shape} != (4*{hidden_size}, {hidden_size})")
        if b.data.shape != (4 * hidden_size,):
            raise DimensionError(f"biases {b.data.shape} != (4*{hidden_size},)")
        self.w = w
        self.r = r
        self.b = b
        self.hidden_size = hidden_size

    @property
    def input_dim(self) -> int:
        return self.w.data.shape[1]


class ParameterStore:
    """Ordered name -> Tensor map for every trainable tensor of a model."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise StateError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=np.float64))
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def n_scalars(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def gradients(self, record: Record) -> dict[str, np.ndarray]:
        """Per-parameter gradients reached by a backward pass on ``record``."""
        out: dict[str, np.ndarray] = {}
        for name, tensor in self._params.items():
            g = record.grad(tensor)
            if g is not None:
                out[name] = g
        return out

    def copy_values(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, tensor in self._params.items():
            src = values[name]
            if src.shape != tensor.data.shape:
                raise DimensionError(
                    f"parameter {name!r}: stored shape {src.shape} != expected {tensor.data.shape}"
                )
            tensor.data = np.array(src, dtype=np.float64)


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    r = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-r, r, size=(rows, cols))


def glorot_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    r = math.sqrt(6.0 / (n + 1))
    return rng.uniform(-r, r, size=n)


def init_lstm(store: ParameterStore, prefix: str, input_dim: int, hidden: int,
              rng: np.random.Generator) -> LstmParams:
    w = store.add(f"{prefix}.w", glorot(rng, 4 * hidden, input_dim))
    r = store.add(f"{prefix}.r", glorot(rng, 4 * hidden, hidden))
    bias = np.zeros(4 * hidden)
    bias[hidden:2 * hidden] = 1.0  # forget gate starts open
    b = store.add(f"{prefix}.b", bias)
    return LstmParams(w, r, b, hidden)
