"""Layer stack: architecture parsing, parameter init, forward, backward.

A model is an ordered list of layer specs:

    Projection   token-id lookup table; realizes the context window by
                 concatenating the embeddings of the window words
    Dense        fully connected + activation
    FsmnHidden   fully connected layer that also consumes the memory
                 encoding of its input through a second weight matrix
    RnnBaseline  simple recurrent layer (comparison subject)
    Output       linear layer producing logits

The memory block conceptually sits on the output of the layer BEFORE an
FsmnHidden layer; implementation-wise, the consuming layer owns the mix
weight and the memory coefficients, so "600(M)" in an architecture
string means the 600-unit layer's output reaches the next layer both
directly and through a memory block.

Activations are (dim, frames) matrices, one column per frame; packed
batches carry per-sequence lengths so memory blocks and recurrent layers
never read across sequence boundaries. Backward passes are hand-derived;
where the direct path and the memory path both reach an activation, the
two error signals are summed.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import memory as memblock
from .linalg import (
    ShapeError,
    TrainingError,
    activation_backward,
    apply_activation,
    glorot_uniform,
    matmul,
)
from .memory import MemoryConfig


class UsageError(RuntimeError):
    """Forward/backward protocol violation (stale or foreign trace)."""


# ---------------------------------------------------------------------------
# Layer specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Projection:
    """Embedding lookup over a context window of token ids.

    The table has vocab+1 rows; the extra row embeds the sequence-start
    padding id (== vocab), which is never a prediction target.
    """

    vocab: int
    dim: int
    window: int = 1

    def __post_init__(self):
        if self.vocab < 1 or self.dim < 1 or self.window < 1:
            raise ValueError(f"bad projection spec {self}")

    @property
    def out_dim(self):
        return self.window * self.dim


@dataclass(frozen=True)
class Dense:
    in_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"bad dense spec {self}")


@dataclass(frozen=True)
class FsmnHidden:
    """Hidden layer fed by both its input and that input's memory encoding."""

    in_dim: int
    out_dim: int
    mem: MemoryConfig
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"bad hidden spec {self}")
        if self.mem.dim != self.in_dim:
            raise ShapeError(
                f"memory block dim {self.mem.dim} != layer input dim {self.in_dim}"
            )


@dataclass(frozen=True)
class RnnBaseline:
    """Simple recurrent layer, full-sequence backprop through time."""

    in_dim: int
    out_dim: int
    activation: str = "tanh"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"bad recurrent spec {self}")


@dataclass(frozen=True)
class Output:
    """Linear logits layer; may consume a memory encoding like FsmnHidden."""

    in_dim: int
    vocab: int
    mem: MemoryConfig = None

    def __post_init__(self):
        if self.in_dim < 1 or self.vocab < 1:
            raise ValueError(f"bad output spec {self}")
        if self.mem is not None and self.mem.dim != self.in_dim:
            raise ShapeError(
                f"memory block dim {self.mem.dim} != output input dim {self.in_dim}"
            )

    @property
    def out_dim(self):
        return self.vocab


@dataclass(frozen=True)
class ModelSpec:
    """Validated ordered layer stack plus the string it was parsed from."""

    layers: tuple
    arch: str = ""

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("model needs at least one layer")
        if not isinstance(layers[-1], Output):
            raise ValueError("last layer must be an Output layer")
        for i, lay in enumerate(layers):
            if isinstance(lay, Output) and i != len(layers) - 1:
                raise ValueError("Output layer must come last")
            if isinstance(lay, Projection) and i != 0:
                raise ValueError("Projection layer must come first")
        prev = None
        for i, lay in enumerate(layers):
            if prev is not None and getattr(lay, "in_dim", None) != prev:
                raise ShapeError(
                    f"layer {i} expects input dim {getattr(lay, 'in_dim', None)}, "
                    f"previous layer produces {prev}"
                )
            prev = lay.out_dim

    @property
    def input_window(self):
        """Context-window width of a token model, 0 for frame models."""
        first = self.layers[0]
        return first.window if isinstance(first, Projection) else 0

    @property
    def vocab_size(self):
        return self.layers[-1].vocab


DEFAULT_MEMORY = {"kind": "vector", "lookback": 20, "lookahead": 0}


def parse_arch(text, vocab_size=None, memory=None, hidden_activation="relu"):
    """Parse an architecture string into a ModelSpec.

    Segments are dash-separated. The first segment is either `[w*d]`
    (projection: context window w, embedding size d, needs vocab_size) or
    a plain integer (raw input dimension). Middle segments are hidden
    sizes, with `k*N` repeating a size k times, `(M)` putting a memory
    block on the layer's output, and `(R)` making the layer recurrent.
    The last segment is the output size: an integer, `Nk` for N*1000, or
    `V` for the vocabulary size. Example: `[2*200]-600(M)-600-600-80k`.

    `memory` overrides the DEFAULT_MEMORY settings (kind, lookback,
    lookahead, att_dim, att_activation) applied at every `(M)` mark.
    """
    if not text or not text.strip():
        raise ValueError("empty architecture string")
    text = text.strip()
    segs = text.split("-")
    if len(segs) < 2:
        raise ValueError(f"architecture {text!r} needs input and output segments")
    mem_settings = dict(DEFAULT_MEMORY)
    if memory:
        mem_settings.update(memory)

    layers = []
    head = segs[0]
    m = re.fullmatch(r"\[(\d+)\*(\d+)\]", head)
    if m:
        if vocab_size is None:
            raise ValueError(f"segment {head!r} needs a vocabulary size")
        layers.append(Projection(vocab_size, int(m.group(2)), int(m.group(1))))
        cur = layers[0].out_dim
    elif re.fullmatch(r"[1-9]\d*", head):
        cur = int(head)
    else:
        raise ValueError(f"cannot parse input segment {head!r} of {text!r}")

    tail = segs[-1]
    if tail == "V":
        if vocab_size is None:
            raise ValueError("output segment 'V' needs a vocabulary size")
        out_size = vocab_size
    elif re.fullmatch(r"[1-9]\d*k", tail):
        out_size = int(tail[:-1]) * 1000
    elif re.fullmatch(r"[1-9]\d*", tail):
        out_size = int(tail)
    else:
        raise ValueError(f"cannot parse output segment {tail!r} of {text!r}")

    carry_mem = False
    for seg in segs[1:-1]:
        m = re.fullmatch(r"(?:([1-9]\d*)\*)?([1-9]\d*)(\(M\)|\(R\))?", seg)
        if not m:
            raise ValueError(f"cannot parse segment {seg!r} of {text!r}")
        count = int(m.group(1)) if m.group(1) else 1
        size = int(m.group(2))
        mark = m.group(3)
        for _ in range(count):
            if mark == "(R)":
                if carry_mem:
                    raise ValueError(
                        f"segment {seg!r}: a recurrent layer cannot consume a memory block"
                    )
                layers.append(RnnBaseline(cur, size))
            elif carry_mem:
                layers.append(
                    FsmnHidden(cur, size, MemoryConfig(dim=cur, **mem_settings), hidden_activation)
                )
            else:
                layers.append(Dense(cur, size, hidden_activation))
            carry_mem = mark == "(M)"
            cur = size
    out_mem = MemoryConfig(dim=cur, **mem_settings) if carry_mem else None
    layers.append(Output(cur, out_size, out_mem))
    return ModelSpec(tuple(layers), arch=text)


# ---------------------------------------------------------------------------
# Single-layer forward primitives
# ---------------------------------------------------------------------------


def fsmn_layer_forward(hidden, encoded, weight, mem_weight, bias, activation="relu"):
    """Next-layer activations from a hidden matrix and its memory encoding.

    Computes f(weight @ hidden + mem_weight @ encoded + bias) column by
    column; this is the layer update every FsmnHidden layer runs.
    """
    hidden = np.asarray(hidden)
    encoded = np.asarray(encoded)
    if encoded.shape != hidden.shape:
        raise ShapeError(f"encoding shape {encoded.shape} != hidden shape {hidden.shape}")
    if np.shape(mem_weight) != np.shape(weight):
        raise ShapeError(
            f"memory weight shape {np.shape(mem_weight)} != weight shape {np.shape(weight)}"
        )
    pre = matmul(weight, hidden) + matmul(mem_weight, encoded) + np.asarray(bias)[:, None]
    return apply_activation(activation, pre)


def rnn_layer_forward(x, weight, rec_weight, bias, activation="tanh", lengths=None):
    """Recurrent layer activations, strictly sequential in the frame index.

    The state starts at zero and is reset at every sequence boundary of a
    packed batch (lengths lists the per-sequence frame counts).
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeError(f"input must be 2-D, got shape {x.shape}")
    weight = np.asarray(weight)
    rec_weight = np.asarray(rec_weight)
    bias = np.asarray(bias)
    out_dim = weight.shape[0]
    if weight.shape[1] != x.shape[0]:
        raise ShapeError(f"weight shape {weight.shape} does not accept input dim {x.shape[0]}")
    if rec_weight.shape != (out_dim, out_dim):
        raise ShapeError(f"recurrent weight shape {rec_weight.shape}, expected {(out_dim, out_dim)}")
    total = x.shape[1]
    bounds = _block_bounds(total, lengths)
    out = np.zeros((out_dim, total), dtype=x.dtype)
    drive = matmul(weight, x) + bias[:, None]
    for s, e in bounds:
        h = np.zeros(out_dim, dtype=x.dtype)
        for t in range(s, e):
            h = apply_activation(activation, drive[:, t] + rec_weight @ h)
            out[:, t] = h
    return out


def _block_bounds(total, lengths):
    if lengths is None:
        return [(0, total)]
    lengths = [int(v) for v in lengths]
    if any(v <= 0 for v in lengths) or sum(lengths) != total:
        raise ShapeError(f"lengths {lengths} do not cover {total} frames")
    bounds = []
    s = 0
    for v in lengths:
        bounds.append((s, s + v))
        s += v
    return bounds


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass
class ForwardTrace:
    """Everything backward needs from one forward pass."""

    model: "Model"
    lengths: tuple
    records: list
    logits: np.ndarray


_PARAM_ORDER = (
    "table",
    "w",
    "rec_w",
    "mem_w",
    "b",
    "taps_back",
    "taps_ahead",
    "query_w",
    "query_bias",
    "mix_w",
)


class Model:
    """A layer stack bound to its parameter tensors.

    Parameters live in per-layer dicts and are updated in place by the
    optimizer; named_params exposes them flat as "L<i>.<field>" in a
    fixed order that the checkpoint format and gradient dicts share.
    """

    def __init__(self, spec, params, dtype):
        self.spec = spec
        self.params = params
        self.dtype = np.dtype(dtype)
        if len(params) != len(spec.layers):
            raise ShapeError(
                f"{len(params)} parameter sets for {len(spec.layers)} layers"
            )

    def named_params(self):
        out = {}
        for i, pset in enumerate(self.params):
            for name in _PARAM_ORDER:
                if name in pset:
                    out[f"L{i}.{name}"] = pset[name]
        return out

    def memory_params(self, index):
        """MemoryParams view of layer index's memory coefficients."""
        pset = self.params[index]
        fields = {
            k: pset[k]
            for k in ("taps_back", "taps_ahead", "query_w", "query_bias", "mix_w")
            if k in pset
        }
        if not fields:
            raise ValueError(f"layer {index} has no memory block")
        return memblock.MemoryParams(**fields)

    # -- forward ------------------------------------------------------------

    def forward(self, batch):
        """Run the stack over a batch; returns (logits, trace).

        batch is a PackedBatch (inputs + lengths) or a bare input array
        treated as a single sequence. Token models take int ids shaped
        (window, frames); frame models take a (in_dim, frames) matrix.
        """
        inputs = getattr(batch, "inputs", batch)
        lengths = getattr(batch, "lengths", None)
        if lengths is not None:
            lengths = tuple(int(v) for v in lengths)
        value = inputs
        records = []
        for lay, pset in zip(self.spec.layers, self.params):
            value, rec = self._layer_forward(lay, pset, value, lengths)
            records.append(rec)
        if not np.isfinite(value).all():
            raise TrainingError("non-finite logits; parameters have diverged or are corrupt")
        return value, ForwardTrace(self, lengths, records, value)

    def _layer_forward(self, lay, pset, value, lengths):
        if isinstance(lay, Projection):
            ids = np.asarray(value)
            if ids.ndim != 2 or ids.shape[0] != lay.window:
                raise ShapeError(
                    f"token inputs have shape {ids.shape}, expected ({lay.window}, frames)"
                )
            if not np.issubdtype(ids.dtype, np.integer):
                raise ShapeError(f"token inputs must be integer ids, got dtype {ids.dtype}")
            table = pset["table"]
            if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
                raise ShapeError(
                    f"token id out of range [0, {table.shape[0]}) in projection input"
                )
            looked = table[ids]
            out = looked.transpose(0, 2, 1).reshape(lay.out_dim, ids.shape[1])
            return np.ascontiguousarray(out), {"ids": ids}
        x = np.asarray(value)
        if x.dtype != self.dtype:
            x = x.astype(self.dtype)
        if x.ndim != 2 or x.shape[0] != lay.in_dim:
            raise ShapeError(
                f"layer input has shape {x.shape}, expected ({lay.in_dim}, frames)"
            )
        if isinstance(lay, Dense):
            out = apply_activation(lay.activation, matmul(pset["w"], x) + pset["b"][:, None])
            return out, {"x": x, "out": out}
        if isinstance(lay, FsmnHidden):
            enc = memblock.encode(x, lay.mem, self.memory_params_of(pset), lengths)
            out = fsmn_layer_forward(x, enc, pset["w"], pset["mem_w"], pset["b"], lay.activation)
            return out, {"x": x, "enc": enc, "out": out}
        if isinstance(lay, RnnBaseline):
            out = rnn_layer_forward(
                x, pset["w"], pset["rec_w"], pset["b"], lay.activation, lengths
            )
            return out, {"x": x, "out": out}
        if isinstance(lay, Output):
            if lay.mem is None:
                out = matmul(pset["w"], x) + pset["b"][:, None]
                return out, {"x": x}
            enc = memblock.encode(x, lay.mem, self.memory_params_of(pset), lengths)
            out = fsmn_layer_forward(x, enc, pset["w"], pset["mem_w"], pset["b"], "linear")
            return out, {"x": x, "enc": enc}
        raise TypeError(f"unknown layer spec {type(lay).__name__}")

    @staticmethod
    def memory_params_of(pset):
        fields = {
            k: pset[k]
            for k in ("taps_back", "taps_ahead", "query_w", "query_bias", "mix_w")
            if k in pset
        }
        return memblock.MemoryParams(**fields)

    # -- backward -----------------------------------------------------------

    def backward(self, trace, loss_grad):
        """Gradients of a scalar loss for every parameter tensor.

        trace must come from this model's immediately matching forward;
        loss_grad is the loss gradient at the logits, same shape.
        """
        if not isinstance(trace, ForwardTrace) or trace.model is not self:
            raise UsageError("trace was not produced by this model's forward")
        if len(trace.records) != len(self.spec.layers):
            raise UsageError("trace does not cover this model's layers")
        err = np.asarray(loss_grad)
        if err.shape != trace.logits.shape:
            raise UsageError(
                f"loss gradient shape {err.shape} != logits shape {trace.logits.shape}"
            )
        if err.dtype != self.dtype:
            err = err.astype(self.dtype)
        grads = {}
        for i in range(len(self.spec.layers) - 1, -1, -1):
            lay = self.spec.layers[i]
            pset = self.params[i]
            rec = trace.records[i]
            err = self._layer_backward(lay, pset, rec, err, trace.lengths, grads, i)
        named = self.named_params()
        return {k: grads[k] for k in named}

    def _layer_backward(self, lay, pset, rec, err, lengths, grads, i):
        key = lambda name: f"L{i}.{name}"
        if isinstance(lay, Projection):
            g = np.zeros_like(pset["table"])
            ids = rec["ids"]
            frames = ids.shape[1]
            for w in range(lay.window):
                piece = err[w * lay.dim : (w + 1) * lay.dim, :]
                np.add.at(g, ids[w], piece.T)
            grads[key("table")] = g
            return None
        if isinstance(lay, Dense):
            e_pre = activation_backward(lay.activation, rec["out"], err)
            grads[key("w")] = matmul(e_pre, rec["x"].T)
            grads[key("b")] = e_pre.sum(axis=1)
            return matmul(pset["w"].T, e_pre)
        if isinstance(lay, FsmnHidden) or (isinstance(lay, Output) and lay.mem is not None):
            if isinstance(lay, FsmnHidden):
                e_pre = activation_backward(lay.activation, rec["out"], err)
                cfg = lay.mem
            else:
                e_pre = err
                cfg = lay.mem
            x, enc = rec["x"], rec["enc"]
            grads[key("w")] = matmul(e_pre, x.T)
            grads[key("mem_w")] = matmul(e_pre, enc.T)
            grads[key("b")] = e_pre.sum(axis=1)
            err_enc = matmul(pset["mem_w"].T, e_pre)
            mem_grads, err_mem = memblock.encode_backward(
                x, err_enc, cfg, self.memory_params_of(pset), lengths
            )
            for name, g in mem_grads.items():
                grads[key(name)] = g
            return matmul(pset["w"].T, e_pre) + err_mem
        if isinstance(lay, RnnBaseline):
            return self._rnn_backward(lay, pset, rec, err, lengths, grads, key)
        if isinstance(lay, Output):
            grads[key("w")] = matmul(err, rec["x"].T)
            grads[key("b")] = err.sum(axis=1)
            return matmul(pset["w"].T, err)
        raise TypeError(f"unknown layer spec {type(lay).__name__}")

    def _rnn_backward(self, lay, pset, rec, err, lengths, grads, key):
        x, out = rec["x"], rec["out"]
        w, rec_w = pset["w"], pset["rec_w"]
        g_w = np.zeros_like(w)
        g_rec = np.zeros_like(rec_w)
        g_b = np.zeros_like(pset["b"])
        err_x = np.zeros_like(x)
        for s, e in _block_bounds(x.shape[1], lengths):
            carry = np.zeros(lay.out_dim, dtype=x.dtype)
            for t in range(e - 1, s - 1, -1):
                e_pre = activation_backward(lay.activation, out[:, t], err[:, t] + carry)
                g_w += np.outer(e_pre, x[:, t])
                g_b += e_pre
                if t > s:
                    g_rec += np.outer(e_pre, out[:, t - 1])
                err_x[:, t] = w.T @ e_pre
                carry = rec_w.T @ e_pre
        grads[key("w")] = g_w
        grads[key("rec_w")] = g_rec
        grads[key("b")] = g_b
        return err_x


def build_model(spec, dtype=np.float32, seed=0, tap_jitter=0.0):
    """Initialize a Model: fan-balanced uniform weights, zero biases,
    identity-filter memory taps (optionally jittered), all draws from one
    seeded generator so the result is a pure function of (spec, seed)."""
    rng = np.random.default_rng(seed)
    dtype = np.dtype(dtype)
    params = []
    for lay in spec.layers:
        pset = {}
        if isinstance(lay, Projection):
            r = math.sqrt(6.0 / (lay.dim + lay.dim))
            pset["table"] = rng.uniform(-r, r, (lay.vocab + 1, lay.dim)).astype(dtype)
        elif isinstance(lay, Dense):
            pset["w"] = glorot_uniform(rng, lay.out_dim, lay.in_dim, dtype)
            pset["b"] = np.zeros(lay.out_dim, dtype=dtype)
        elif isinstance(lay, FsmnHidden):
            pset["w"] = glorot_uniform(rng, lay.out_dim, lay.in_dim, dtype)
            pset["mem_w"] = glorot_uniform(rng, lay.out_dim, lay.in_dim, dtype)
            pset["b"] = np.zeros(lay.out_dim, dtype=dtype)
            mp = memblock.init_memory_params(lay.mem, dtype, rng, tap_jitter)
            pset.update(mp.arrays())
        elif isinstance(lay, RnnBaseline):
            pset["w"] = glorot_uniform(rng, lay.out_dim, lay.in_dim, dtype)
            pset["rec_w"] = glorot_uniform(rng, lay.out_dim, lay.out_dim, dtype)
            pset["b"] = np.zeros(lay.out_dim, dtype=dtype)
        elif isinstance(lay, Output):
            pset["w"] = glorot_uniform(rng, lay.vocab, lay.in_dim, dtype)
            if lay.mem is not None:
                pset["mem_w"] = glorot_uniform(rng, lay.vocab, lay.in_dim, dtype)
            pset["b"] = np.zeros(lay.vocab, dtype=dtype)
            if lay.mem is not None:
                mp = memblock.init_memory_params(lay.mem, dtype, rng, tap_jitter)
                pset.update(mp.arrays())
        else:
            raise TypeError(f"unknown layer spec {type(lay).__name__}")
        params.append(pset)
    return Model(spec, params, dtype)


def param_shapes(spec):
    """Expected tensor shapes of a spec, keyed like named_params.

    Mirrors build_model's layout without allocating anything; checkpoint
    loading validates manifests against this.
    """
    shapes = {}

    def mem_shapes(i, cfg):
        if cfg.kind == "scalar":
            shapes[f"L{i}.taps_back"] = (cfg.lookback + 1,)
            shapes[f"L{i}.taps_ahead"] = (cfg.lookahead,)
        elif cfg.kind == "vector":
            shapes[f"L{i}.taps_back"] = (cfg.lookback + 1, cfg.dim)
            shapes[f"L{i}.taps_ahead"] = (cfg.lookahead, cfg.dim)
        else:
            shapes[f"L{i}.query_w"] = (cfg.att_dim, cfg.dim)
            shapes[f"L{i}.query_bias"] = (cfg.att_dim,)
            shapes[f"L{i}.mix_w"] = (cfg.n_coeffs, cfg.att_dim)

    for i, lay in enumerate(spec.layers):
        if isinstance(lay, Projection):
            shapes[f"L{i}.table"] = (lay.vocab + 1, lay.dim)
        elif isinstance(lay, Dense):
            shapes[f"L{i}.w"] = (lay.out_dim, lay.in_dim)
            shapes[f"L{i}.b"] = (lay.out_dim,)
        elif isinstance(lay, FsmnHidden):
            shapes[f"L{i}.w"] = (lay.out_dim, lay.in_dim)
            shapes[f"L{i}.mem_w"] = (lay.out_dim, lay.in_dim)
            shapes[f"L{i}.b"] = (lay.out_dim,)
            mem_shapes(i, lay.mem)
        elif isinstance(lay, RnnBaseline):
            shapes[f"L{i}.w"] = (lay.out_dim, lay.in_dim)
            shapes[f"L{i}.rec_w"] = (lay.out_dim, lay.out_dim)
            shapes[f"L{i}.b"] = (lay.out_dim,)
        elif isinstance(lay, Output):
            shapes[f"L{i}.w"] = (lay.vocab, lay.in_dim)
            if lay.mem is not None:
                shapes[f"L{i}.mem_w"] = (lay.vocab, lay.in_dim)
            shapes[f"L{i}.b"] = (lay.vocab,)
            if lay.mem is not None:
                mem_shapes(i, lay.mem)
        else:
            raise TypeError(f"unknown layer spec {type(lay).__name__}")
    return shapes


def forward(model, batch):
    """Module-level alias for Model.forward."""
    return model.forward(batch)


def backward(model, trace, loss_grad):
    """Module-level alias for Model.backward."""
    return model.backward(trace, loss_grad)


def receptive_field(model_or_spec):
    """(past_frames, future_frames) one output column can see.

    Sums per-layer window extents over all memory blocks: lookback order
    and lookahead order for scalar/vector blocks; an attention block's
    lookback coefficients cover offsets 0..N1-1, so it contributes N1-1
    past frames. A recurrent layer makes the past unbounded (math.inf).
    The input context window of a token model is not included; callers
    add spec.input_window - 1 frames of past reach for those.
    """
    spec = getattr(model_or_spec, "spec", model_or_spec)
    past = 0
    future = 0
    unbounded = False
    for lay in spec.layers:
        if isinstance(lay, RnnBaseline):
            unbounded = True
        cfg = getattr(lay, "mem", None)
        if cfg is not None:
            if cfg.kind == "attention":
                past += max(cfg.lookback - 1, 0)
            else:
                past += cfg.lookback
            future += cfg.lookahead
    return (math.inf if unbounded else past, future)
