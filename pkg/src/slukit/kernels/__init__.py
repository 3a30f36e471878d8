"""Backend selection for the LSTM sequence kernels.

At import time the compiled Cython module is preferred when present; the
numpy implementation in :mod:`slukit.kernels.py_kernels` is the fallback.
Set ``SLUKIT_KERNELS=python`` to force the fallback or
``SLUKIT_KERNELS=compiled`` to require the extension (ImportError if absent).

Callers should go through :func:`lstm_forward` / :func:`lstm_backward` on
this module (attribute access, not ``from`` imports) so that
:func:`use` can rebind the backend, e.g. for benchmarking.
"""

import os

from . import py_kernels

_BACKENDS = {"python": py_kernels}
try:
    from . import _lstm_c

    _BACKENDS["compiled"] = _lstm_c
except ImportError:
    _lstm_c = None

_requested = os.environ.get("SLUKIT_KERNELS", "auto")
if _requested == "auto":
    _active_name = "compiled" if "compiled" in _BACKENDS else "python"
elif _requested in _BACKENDS:
    _active_name = _requested
elif _requested == "compiled":
    raise ImportError(
        "SLUKIT_KERNELS=compiled but the compiled kernels are not built; "
        "run `pip install -e .` with a C compiler available"
    )
else:
    raise ImportError(f"unknown SLUKIT_KERNELS value: {_requested!r}")

_active = _BACKENDS[_active_name]
lstm_forward = _active.lstm_forward
lstm_backward = _active.lstm_backward


def backend() -> str:
    """Name of the active backend: 'compiled' or 'python'."""
    return _active_name


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def use(name: str) -> None:
    """Rebind the kernel functions to the named backend."""
    global _active, _active_name, lstm_forward, lstm_backward
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    _active = _BACKENDS[name]
    _active_name = name
    lstm_forward = _active.lstm_forward
    lstm_backward = _active.lstm_backward
