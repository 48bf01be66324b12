"""Dense linear algebra, activations, and loss primitives.

Everything operates on numpy arrays in row-major (C) order. The time axis
is always the last one: a batch of hidden activations is a (dim, frames)
matrix whose column t is the activation vector at frame t.

All functions are pure (inputs are never mutated) and return freshly
allocated arrays. Training runs in float32 by default; the test oracles
drive the same code in float64.
"""

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform."""


class TrainingError(RuntimeError):
    """Optimization produced an unusable state (non-finite values)."""


def matmul(a, b):
    """Matrix product with an explicit conformance check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def relu(x):
    return np.maximum(x, 0)


def relu_backward(x, err_out):
    """Route the error through positive inputs only.

    The subgradient at exactly 0 is taken as 0, so err_out passes where
    x > 0 and is dropped everywhere else.
    """
    return err_out * (x > 0)


def sigmoid(x):
    """Standard logistic function 1 / (1 + exp(-x)).

    Not used by the default models; provided for completeness.
    """
    out = np.empty_like(np.asarray(x, dtype=float))
    x = np.asarray(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh_backward(y, err_out):
    """Backward through tanh given the forward output y."""
    return err_out * (1.0 - y * y)


def log_softmax(logits):
    """Column-wise log-softmax with max subtraction for stability."""
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=0, keepdims=True))


def softmax(logits):
    """Column-wise softmax; columns sum to 1."""
    return np.exp(log_softmax(logits))


def softmax_cross_entropy(logits, targets):
    """Mean cross entropy over frames and its gradient w.r.t. the logits.

    logits is (classes, frames); targets holds one class index per frame.
    Returns (loss, grad) where grad = (softmax - onehot) / frames, i.e. the
    gradient of the mean per-frame loss.
    """
    logits = np.asarray(logits)
    targets = np.asarray(targets)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be 2-D, got {logits.shape}")
    n_classes, n_frames = logits.shape
    if targets.shape != (n_frames,):
        raise ShapeError(
            f"targets shape {targets.shape} does not match {n_frames} logit columns"
        )
    if n_frames == 0:
        raise ValueError("cannot take cross entropy over zero frames")
    if targets.min() < 0 or targets.max() >= n_classes:
        raise ValueError(
            f"target index out of range [0, {n_classes}): "
            f"min={targets.min()}, max={targets.max()}"
        )
    cols = np.arange(n_frames)
    log_probs = log_softmax(logits)
    loss = float(-log_probs[targets, cols].mean())
    grad = np.exp(log_probs)
    grad[targets, cols] -= 1.0
    grad /= n_frames
    return loss, grad


ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")


def apply_activation(name, x):
    if name == "relu":
        return relu(x)
    if name == "tanh":
        return np.tanh(x)
    if name == "sigmoid":
        return sigmoid(x)
    if name == "linear":
        return np.asarray(x)
    raise ValueError(f"unknown activation {name!r}")


def activation_backward(name, out, err_out):
    """Backward through an activation given its forward *output*.

    For every supported activation the derivative is a function of the
    output, so forward traces only need to keep the activations.
    """
    if name == "relu":
        return err_out * (out > 0)
    if name == "tanh":
        return tanh_backward(out, err_out)
    if name == "sigmoid":
        return err_out * (out * (1.0 - out))
    if name == "linear":
        return np.asarray(err_out)
    raise ValueError(f"unknown activation {name!r}")


def rng_uniform(seed, lo, hi, shape, dtype=np.float64):
    """Deterministic uniform draw in [lo, hi) for a fixed seed."""
    if not lo < hi:
        raise ValueError(f"empty uniform range [{lo}, {hi})")
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=shape).astype(dtype, copy=False)


def glorot_uniform(rng, fan_out, fan_in, dtype=np.float64):
    """Fan-balanced uniform init: U(-r, r) with r = sqrt(6/(fan_in+fan_out))."""
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_out, fan_in)).astype(dtype, copy=False)
