"""The tapped-delay memory block, all variants, all backward passes.

A memory block turns the hidden activations of a layer, a (dim, frames)
matrix H with one column per frame, into an equally shaped encoding. At
frame t the encoding is a weighted sum over a window of columns:

    scalar     enc_t = sum_{i=0}^{N1} a_i * h_{t-i} + sum_{j=1}^{N2} c_j * h_{t+j}
    vector     same, with per-dimension coefficient vectors and elementwise products
    attention  coefficients recomputed per frame from h_t by a small two-layer map

N1 is the lookback order (past taps beyond the current frame), N2 the
lookahead order. Indices that fall outside the sequence, or outside a
block of a packed batch, contribute exactly zero.

Three routes compute the scalar/vector encoding and agree to rounding:

    encode_naive    per-timestep reference loop (the test oracle)
    encode_banded   one dense product H @ M against a materialized band
                    matrix whose diagonals carry the taps
    encode          tap-walk kernels (compiled or numpy) that skip the
                    zeros; this is what the network layers use

Backward passes are hand-derived. For the banded route the tap gradient
falls out of the full matrix gradient dM = H^T @ e_enc by summing each
tied in-block diagonal; `scalar_backward` implements that literally and
doubles as the reference for the walk kernels.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._kernels_np import shift_masks
from .linalg import ShapeError, apply_activation, glorot_uniform, matmul

KINDS = ("scalar", "vector", "attention")


@dataclass(frozen=True)
class MemoryConfig:
    """Shape of one memory block: variant, window orders, hidden width."""

    kind: str
    lookback: int
    lookahead: int
    dim: int
    att_dim: int = 0
    att_activation: str = "relu"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown memory kind {self.kind!r}, expected one of {KINDS}")
        if self.lookback < 0 or self.lookahead < 0:
            raise ValueError("lookback and lookahead orders must be >= 0")
        if self.dim < 1:
            raise ValueError("hidden dim must be >= 1")
        if self.kind == "attention":
            if self.att_dim < 1:
                raise ValueError("attention kind needs att_dim >= 1")
            if self.lookback + self.lookahead < 1:
                raise ValueError("attention kind needs lookback + lookahead >= 1")

    @property
    def n_coeffs(self):
        """Per-frame coefficient count of the attention map.

        The attention window covers lookback offsets 0..N1-1 plus N2
        lookahead frames, one coefficient each; this differs from the
        scalar/vector convention of N1+1 lookback taps and is kept as is.
        """
        return self.lookback + self.lookahead


@dataclass
class MemoryParams:
    """Learnable coefficients of one memory block.

    scalar/vector use taps_back (N1+1 taps, oldest tap last) and
    taps_ahead (N2 taps); attention uses the query map (query_w,
    query_bias) and the coefficient mix mix_w.
    """

    taps_back: np.ndarray = None
    taps_ahead: np.ndarray = None
    query_w: np.ndarray = None
    query_bias: np.ndarray = None
    mix_w: np.ndarray = None

    def arrays(self):
        """Named parameter tensors, in a fixed order."""
        out = {}
        for name in ("taps_back", "taps_ahead", "query_w", "query_bias", "mix_w"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out


def init_memory_params(cfg, dtype=np.float32, rng=None, tap_jitter=0.0):
    """Fresh parameters for a block.

    Scalar/vector taps start as the identity filter (current-frame tap 1,
    everything else 0) so an untrained network behaves like a plain DNN;
    tap_jitter adds a uniform perturbation of that half-width. Attention
    parameters are fan-balanced random draws and require an rng.
    """
    if cfg.kind == "scalar":
        taps_back = np.zeros(cfg.lookback + 1, dtype=dtype)
        taps_back[0] = 1.0
        taps_ahead = np.zeros(cfg.lookahead, dtype=dtype)
        if tap_jitter:
            if rng is None:
                raise ValueError("tap_jitter needs an rng")
            taps_back += rng.uniform(-tap_jitter, tap_jitter, taps_back.shape).astype(dtype)
            taps_ahead += rng.uniform(-tap_jitter, tap_jitter, taps_ahead.shape).astype(dtype)
        return MemoryParams(taps_back=taps_back, taps_ahead=taps_ahead)
    if cfg.kind == "vector":
        taps_back = np.zeros((cfg.lookback + 1, cfg.dim), dtype=dtype)
        taps_back[0, :] = 1.0
        taps_ahead = np.zeros((cfg.lookahead, cfg.dim), dtype=dtype)
        if tap_jitter:
            if rng is None:
                raise ValueError("tap_jitter needs an rng")
            taps_back += rng.uniform(-tap_jitter, tap_jitter, taps_back.shape).astype(dtype)
            taps_ahead += rng.uniform(-tap_jitter, tap_jitter, taps_ahead.shape).astype(dtype)
        return MemoryParams(taps_back=taps_back, taps_ahead=taps_ahead)
    if rng is None:
        raise ValueError("attention init needs an rng")
    return MemoryParams(
        query_w=glorot_uniform(rng, cfg.att_dim, cfg.dim, dtype),
        query_bias=np.zeros(cfg.att_dim, dtype=dtype),
        mix_w=glorot_uniform(rng, cfg.n_coeffs, cfg.att_dim, dtype),
    )


def check_params(cfg, params):
    """Raise ShapeError unless params carries the tensors cfg calls for."""
    if cfg.kind == "scalar":
        want_back, want_ahead = (cfg.lookback + 1,), (cfg.lookahead,)
    elif cfg.kind == "vector":
        want_back = (cfg.lookback + 1, cfg.dim)
        want_ahead = (cfg.lookahead, cfg.dim)
    else:
        for name, want in (
            ("query_w", (cfg.att_dim, cfg.dim)),
            ("query_bias", (cfg.att_dim,)),
            ("mix_w", (cfg.n_coeffs, cfg.att_dim)),
        ):
            got = getattr(params, name)
            if got is None or got.shape != want:
                raise ShapeError(
                    f"attention params field {name} has shape "
                    f"{None if got is None else got.shape}, expected {want}"
                )
        return
    for name, want in (("taps_back", want_back), ("taps_ahead", want_ahead)):
        got = getattr(params, name)
        if got is None or got.shape != want:
            raise ShapeError(
                f"{cfg.kind} params field {name} has shape "
                f"{None if got is None else got.shape}, expected {want}"
            )


def _check_hidden(hidden, cfg):
    hidden = np.asarray(hidden)
    if hidden.ndim != 2 or hidden.shape[0] != cfg.dim:
        raise ShapeError(
            f"hidden activations have shape {hidden.shape}, expected ({cfg.dim}, frames)"
        )
    return hidden


def encode_naive(hidden, cfg, params):
    """Per-timestep reference encoding of a single sequence.

    Walks frames one by one and taps one by one, exactly as the closed
    forms read; out-of-range frames contribute zero. Slow on purpose,
    this is the oracle every fast path is checked against.
    """
    hidden = _check_hidden(hidden, cfg)
    check_params(cfg, params)
    frames = hidden.shape[1]
    out = np.zeros_like(hidden)
    if cfg.kind == "attention":
        for t in range(frames):
            coeffs = attention_coeffs(hidden[:, t], cfg, params)
            for i in range(cfg.lookback):
                if t - i >= 0:
                    out[:, t] += coeffs[i] * hidden[:, t - i]
            for j in range(1, cfg.lookahead + 1):
                if t + j < frames:
                    out[:, t] += coeffs[cfg.lookback - 1 + j] * hidden[:, t + j]
        return out
    for t in range(frames):
        for i in range(cfg.lookback + 1):
            if t - i >= 0:
                out[:, t] += params.taps_back[i] * hidden[:, t - i]
        for j in range(1, cfg.lookahead + 1):
            if t + j < frames:
                out[:, t] += params.taps_ahead[j - 1] * hidden[:, t + j]
    return out


def encode(hidden, cfg, params, lengths=None):
    """Fast-path encoding of a (possibly packed) batch of sequences.

    Scalar and vector kinds run on the selected tap-walk kernel backend;
    attention runs on vectorized numpy. lengths lists the per-sequence
    frame counts of a packed batch (None means one sequence).
    """
    hidden = _check_hidden(hidden, cfg)
    check_params(cfg, params)
    starts = _starts(hidden, lengths)
    if cfg.kind == "scalar":
        return kernels.encode_scalar(hidden, params.taps_back, params.taps_ahead, starts)
    if cfg.kind == "vector":
        return kernels.encode_vector(hidden, params.taps_back, params.taps_ahead, starts)
    return attention_encode(hidden, cfg, params, lengths)


def encode_backward(hidden, err_enc, cfg, params, lengths=None):
    """Gradients of the fast-path encoding.

    Returns (grads, err_hidden) where grads maps parameter field names to
    arrays shaped like the parameters, and err_hidden is the error signal
    propagated to the hidden activations.
    """
    hidden = _check_hidden(hidden, cfg)
    check_params(cfg, params)
    starts = _starts(hidden, lengths)
    if cfg.kind == "scalar":
        gb, ga, err = kernels.encode_scalar_backward(
            hidden, err_enc, params.taps_back, params.taps_ahead, starts
        )
        return {"taps_back": gb, "taps_ahead": ga}, err
    if cfg.kind == "vector":
        gb, ga, err = kernels.encode_vector_backward(
            hidden, err_enc, params.taps_back, params.taps_ahead, starts
        )
        return {"taps_back": gb, "taps_ahead": ga}, err
    return attention_backward(hidden, err_enc, cfg, params, lengths)


def _starts(hidden, lengths):
    if lengths is None:
        return None
    return kernels.starts_from_lengths(lengths, total=hidden.shape[1])


# ---------------------------------------------------------------------------
# Banded-matrix route (scalar kind)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandMatrix:
    """Band matrix carrying the taps of a scalar block on its diagonals.

    Entry (row, col) is taps_back[col-row] for 0 <= col-row <= N1 and
    taps_ahead[row-col-1] for 1 <= row-col <= N2, zero elsewhere, applied
    independently inside each block of a packed batch. With the hidden
    matrix laid out (dim, frames), the whole-sequence encoding is the
    single product hidden @ dense.
    """

    taps_back: np.ndarray
    taps_ahead: np.ndarray
    lengths: tuple = field(default_factory=tuple)

    @property
    def frames(self):
        return int(sum(self.lengths))

    @property
    def dense(self):
        """Materialize the (frames, frames) matrix, block diagonal."""
        total = self.frames
        out = np.zeros((total, total), dtype=self.taps_back.dtype)
        offset = 0
        for size in self.lengths:
            for i in range(min(len(self.taps_back) - 1, size - 1) + 1):
                idx = np.arange(size - i)
                out[offset + idx, offset + idx + i] = self.taps_back[i]
            for j in range(1, min(len(self.taps_ahead), size - 1) + 1):
                idx = np.arange(size - j)
                out[offset + idx + j, offset + idx] = self.taps_ahead[j - 1]
            offset += size
        return out


def band_matrix(cfg, params, frames):
    """Band matrix of one sequence of the given length (scalar kind only)."""
    if cfg.kind != "scalar":
        raise ValueError(f"band matrices carry scalar taps, got kind {cfg.kind!r}")
    check_params(cfg, params)
    if frames < 1:
        raise ValueError("sequence length must be >= 1")
    return BandMatrix(params.taps_back, params.taps_ahead, (int(frames),))


def batch_band(blocks):
    """Block-diagonal band matrix of a packed mini-batch.

    All blocks must share their taps (one layer encodes every sequence of
    the batch with the same coefficients).
    """
    if not blocks:
        raise ValueError("need at least one band matrix block")
    first = blocks[0]
    lengths = list(first.lengths)
    for other in blocks[1:]:
        if not (
            np.array_equal(first.taps_back, other.taps_back)
            and np.array_equal(first.taps_ahead, other.taps_ahead)
        ):
            raise ValueError("cannot batch band matrices with different taps")
        lengths.extend(other.lengths)
    return BandMatrix(first.taps_back, first.taps_ahead, tuple(lengths))


def encode_banded(hidden, band):
    """Whole-sequence encoding as one dense product hidden @ band."""
    hidden = np.asarray(hidden)
    if hidden.ndim != 2 or hidden.shape[1] != band.frames:
        raise ShapeError(
            f"hidden activations have shape {hidden.shape}, band covers {band.frames} frames"
        )
    return matmul(hidden, band.dense)


def scalar_backward(hidden, err_enc, band):
    """Backward of the banded route, via the full matrix gradient.

    The gradient with respect to the dense band is hidden^T @ err_enc;
    because one tap ties a whole diagonal of every block, its gradient is
    that matrix summed along the tied in-block diagonals (entries off the
    band are structurally zero and discarded). The error signal returned
    for the hidden activations is err_enc @ dense^T.
    """
    hidden = np.asarray(hidden)
    err_enc = np.asarray(err_enc)
    if hidden.shape != err_enc.shape or hidden.shape[1] != band.frames:
        raise ShapeError(
            f"shapes {hidden.shape} / {err_enc.shape} do not conform to "
            f"{band.frames} band frames"
        )
    full = matmul(hidden.T, err_enc)
    grad_back = np.zeros_like(band.taps_back)
    grad_ahead = np.zeros_like(band.taps_ahead)
    offset = 0
    for size in band.lengths:
        block = full[offset : offset + size, offset : offset + size]
        for i in range(min(len(grad_back) - 1, size - 1) + 1):
            grad_back[i] += np.trace(block, offset=i)
        for j in range(1, min(len(grad_ahead), size - 1) + 1):
            grad_ahead[j - 1] += np.trace(block, offset=-j)
        offset += size
    err_hidden = matmul(err_enc, band.dense.T)
    return grad_back, grad_ahead, err_hidden


# ---------------------------------------------------------------------------
# Attention kind
# ---------------------------------------------------------------------------


def attention_coeffs(hidden, cfg, params):
    """Per-frame window coefficients mix_w @ f(query_w @ h + query_bias).

    Accepts one frame (dim,) or a whole batch (dim, frames); returns the
    matching (n_coeffs,) or (n_coeffs, frames).
    """
    check_params(cfg, params)
    hidden = np.asarray(hidden)
    single = hidden.ndim == 1
    cols = hidden[:, None] if single else hidden
    if cols.shape[0] != cfg.dim:
        raise ShapeError(f"hidden has dim {cols.shape[0]}, expected {cfg.dim}")
    pre = params.query_w @ cols + params.query_bias[:, None]
    coeffs = params.mix_w @ apply_activation(cfg.att_activation, pre)
    return coeffs[:, 0] if single else coeffs


def attention_encode(hidden, cfg, params, lengths=None):
    """Context-dependent encoding with per-frame coefficients.

    Frame t mixes lookback frames t-i for offsets i = 0..N1-1 (coefficient
    row i) and lookahead frames t+j for j = 1..N2 (coefficient row
    N1-1+j), zero padded at sequence and block edges.
    """
    hidden = _check_hidden(hidden, cfg)
    check_params(cfg, params)
    total = hidden.shape[1]
    starts = _starts(hidden, lengths)
    if starts is None:
        starts = np.array([0, total], dtype=np.int64)
    coeffs = attention_coeffs(hidden, cfg, params)
    masks = shift_masks(starts, total, max(cfg.lookback - 1, cfg.lookahead))
    out = np.zeros_like(hidden)
    if cfg.lookback > 0:
        out += coeffs[0] * hidden
    for i in range(1, cfg.lookback):
        if i in masks:
            out[:, i:] += coeffs[i, i:] * (hidden[:, :-i] * masks[i])
    for j in range(1, cfg.lookahead + 1):
        if j in masks:
            row = cfg.lookback - 1 + j
            out[:, :-j] += coeffs[row, :-j] * (hidden[:, j:] * masks[j])
    return out


def attention_backward(hidden, err_enc, cfg, params, lengths=None):
    """Chain-rule gradients through the attention encoding.

    The hidden activations enter twice, as window frames and as the query
    of the coefficient map; both error paths are summed. Returns
    ({"query_w", "query_bias", "mix_w"}, err_hidden).
    """
    hidden = _check_hidden(hidden, cfg)
    check_params(cfg, params)
    err_enc = np.asarray(err_enc)
    if err_enc.shape != hidden.shape:
        raise ShapeError(f"error shape {err_enc.shape} != hidden shape {hidden.shape}")
    total = hidden.shape[1]
    starts = _starts(hidden, lengths)
    if starts is None:
        starts = np.array([0, total], dtype=np.int64)

    pre = params.query_w @ hidden + params.query_bias[:, None]
    act = apply_activation(cfg.att_activation, pre)
    coeffs = params.mix_w @ act
    masks = shift_masks(starts, total, max(cfg.lookback - 1, cfg.lookahead))

    coeff_grad = np.zeros_like(coeffs)
    err_hidden = np.zeros_like(hidden)
    if cfg.lookback > 0:
        coeff_grad[0] = np.sum(err_enc * hidden, axis=0)
        err_hidden += coeffs[0] * err_enc
    for i in range(1, cfg.lookback):
        if i not in masks:
            continue
        src = hidden[:, :-i] * masks[i]
        coeff_grad[i, i:] = np.sum(err_enc[:, i:] * src, axis=0)
        err_hidden[:, :-i] += coeffs[i, i:] * (err_enc[:, i:] * masks[i])
    for j in range(1, cfg.lookahead + 1):
        if j not in masks:
            continue
        row = cfg.lookback - 1 + j
        src = hidden[:, j:] * masks[j]
        coeff_grad[row, :-j] = np.sum(err_enc[:, :-j] * src, axis=0)
        err_hidden[:, j:] += coeffs[row, :-j] * (err_enc[:, :-j] * masks[j])

    grad_mix = coeff_grad @ act.T
    err_act = params.mix_w.T @ coeff_grad
    if cfg.att_activation == "relu":
        err_pre = err_act * (pre > 0)
    elif cfg.att_activation == "tanh":
        err_pre = err_act * (1.0 - act * act)
    elif cfg.att_activation == "linear":
        err_pre = err_act
    else:
        raise ValueError(f"unsupported attention activation {cfg.att_activation!r}")
    grad_query_w = err_pre @ hidden.T
    grad_query_bias = err_pre.sum(axis=1)
    err_hidden += params.query_w.T @ err_pre
    grads = {"query_w": grad_query_w, "query_bias": grad_query_bias, "mix_w": grad_mix}
    return grads, err_hidden
