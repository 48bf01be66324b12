"""Backend selection for the tap-walk memory kernels.

The compiled extension (`fsmn._speedups`, built from Cython) and the numpy
module (`fsmn._kernels_np`) implement the same kernels; whichever is
available is picked once at import. Set FSMN_FORCE_NUMPY=1 before import
to skip the extension, which the benchmark uses to compare both paths.

Public wrappers validate dtypes and layout, allocate outputs, and hand the
arrays to the selected backend. `starts` is the packed-batch block-offset
array (see `starts_from_lengths`).
"""

import os

import numpy as np

from . import _kernels_np
from .linalg import ShapeError

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

if os.environ.get("FSMN_FORCE_NUMPY"):
    _impl = _kernels_np
    BACKEND = "numpy"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_np
        BACKEND = "numpy"


def backend_for(name):
    """Return the named backend module ("compiled" or "numpy")."""
    if name == "numpy":
        return _kernels_np
    if name == "compiled":
        if BACKEND != "compiled":
            raise RuntimeError("compiled extension is not available")
        return _impl
    raise ValueError(f"unknown kernel backend {name!r}")


def starts_from_lengths(lengths, total=None):
    """Block offsets (K+1 int64 entries) for per-sequence lengths."""
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.ndim != 1 or len(lengths) == 0:
        raise ValueError("lengths must be a non-empty 1-D sequence")
    if (lengths <= 0).any():
        raise ValueError(f"sequence lengths must be positive, got {lengths.tolist()}")
    starts = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=starts[1:])
    if total is not None and starts[-1] != total:
        raise ShapeError(f"lengths sum to {starts[-1]}, expected {total} frames")
    return starts


def _prep(hidden, starts):
    hidden = np.ascontiguousarray(hidden)
    if hidden.ndim != 2:
        raise ShapeError(f"hidden activations must be 2-D, got {hidden.shape}")
    if hidden.dtype not in _FLOAT_DTYPES:
        hidden = hidden.astype(np.float64)
    if starts is None:
        starts = np.array([0, hidden.shape[1]], dtype=np.int64)
    else:
        starts = np.ascontiguousarray(starts, dtype=np.int64)
    return hidden, starts


def _taps(arr, dtype, ndim, dim, what):
    arr = np.ascontiguousarray(arr, dtype=dtype)
    if arr.ndim != ndim or (ndim == 2 and arr.shape[1] != dim):
        raise ShapeError(f"{what} taps have shape {arr.shape}, hidden dim is {dim}")
    return arr


def _resolve(impl):
    if impl is None:
        return _impl
    return backend_for(impl)


def encode_scalar(hidden, taps_back, taps_ahead, starts=None, impl=None):
    hidden, starts = _prep(hidden, starts)
    taps_back = _taps(taps_back, hidden.dtype, 1, None, "lookback")
    taps_ahead = _taps(taps_ahead, hidden.dtype, 1, None, "lookahead")
    out = np.zeros_like(hidden)
    _resolve(impl).encode_scalar(hidden, taps_back, taps_ahead, starts, out)
    return out


def encode_vector(hidden, taps_back, taps_ahead, starts=None, impl=None):
    hidden, starts = _prep(hidden, starts)
    dim = hidden.shape[0]
    taps_back = _taps(taps_back, hidden.dtype, 2, dim, "lookback")
    taps_ahead = _taps(taps_ahead, hidden.dtype, 2, dim, "lookahead")
    out = np.zeros_like(hidden)
    _resolve(impl).encode_vector(hidden, taps_back, taps_ahead, starts, out)
    return out


def encode_scalar_backward(hidden, err_enc, taps_back, taps_ahead, starts=None, impl=None):
    hidden, starts = _prep(hidden, starts)
    err_enc = np.ascontiguousarray(err_enc, dtype=hidden.dtype)
    if err_enc.shape != hidden.shape:
        raise ShapeError(f"error shape {err_enc.shape} != hidden shape {hidden.shape}")
    taps_back = _taps(taps_back, hidden.dtype, 1, None, "lookback")
    taps_ahead = _taps(taps_ahead, hidden.dtype, 1, None, "lookahead")
    grad_back = np.zeros_like(taps_back)
    grad_ahead = np.zeros_like(taps_ahead)
    err_hidden = np.zeros_like(hidden)
    _resolve(impl).encode_scalar_backward(
        hidden, err_enc, taps_back, taps_ahead, starts, grad_back, grad_ahead, err_hidden
    )
    return grad_back, grad_ahead, err_hidden


def encode_vector_backward(hidden, err_enc, taps_back, taps_ahead, starts=None, impl=None):
    hidden, starts = _prep(hidden, starts)
    err_enc = np.ascontiguousarray(err_enc, dtype=hidden.dtype)
    if err_enc.shape != hidden.shape:
        raise ShapeError(f"error shape {err_enc.shape} != hidden shape {hidden.shape}")
    dim = hidden.shape[0]
    taps_back = _taps(taps_back, hidden.dtype, 2, dim, "lookback")
    taps_ahead = _taps(taps_ahead, hidden.dtype, 2, dim, "lookahead")
    grad_back = np.zeros_like(taps_back)
    grad_ahead = np.zeros_like(taps_ahead)
    err_hidden = np.zeros_like(hidden)
    _resolve(impl).encode_vector_backward(
        hidden, err_enc, taps_back, taps_ahead, starts, grad_back, grad_ahead, err_hidden
    )
    return grad_back, grad_ahead, err_hidden
