"""Checkpoint container: plain-text header, length-prefixed tensor blobs.

Layout of a checkpoint file:

    fsmn-checkpoint 1
    arch: [2*200]-400(M)-400-V
    activation: relu
    memory: kind=vector lookback=20 lookahead=0 att_dim=0 att_activation=relu
    dtype: float32
    state: epoch=4 lr=0.2 phase=halving halvings=1 best=121.7 prev=122.0 stop=0
    vocab: 10000 unk=0
    <one token per line, line order = id>
    tensors: 12
    <one manifest line per tensor: name dtype dim,dim,...>
    end
    <for each manifest entry, 8-byte little-endian length then raw bytes>

Tensor bytes are little-endian in row-major order, so load(save(x))
reproduces every array bitwise. Momentum buffers are stored alongside
the parameters under "v:"-prefixed names. The version line is checked
before anything else is parsed; the memory/state lines are omitted when
the model has no memory blocks or no training state.

Only models describable by their architecture string can be saved: the
header is the single source of truth for the layer stack, so a spec that
does not round-trip through parse_arch is rejected up front.
"""

import struct

import numpy as np

from .data import Vocab
from .network import Dense, FsmnHidden, Model, build_model, parse_arch, param_shapes
from .training import TrainState

MAGIC = "fsmn-checkpoint"
VERSION = 1

_DTYPES = {"float32": np.dtype("<f4"), "float64": np.dtype("<f8")}


class CheckpointError(RuntimeError):
    pass


def _spec_settings(spec):
    """(memory settings, hidden activation) recoverable from a spec."""
    memory = None
    activation = "relu"
    for lay in spec.layers:
        cfg = getattr(lay, "mem", None)
        if cfg is not None and memory is None:
            memory = {
                "kind": cfg.kind,
                "lookback": cfg.lookback,
                "lookahead": cfg.lookahead,
                "att_dim": cfg.att_dim,
                "att_activation": cfg.att_activation,
            }
        if isinstance(lay, (Dense, FsmnHidden)):
            activation = lay.activation
    return memory, activation


def save_checkpoint(path, model, vocab, state=None):
    """Write model + vocab (+ optional TrainState) to path.

    Raises CheckpointError if the model's spec cannot be rebuilt from its
    architecture string (hand-assembled heterogeneous stacks cannot be
    stored in this format).
    """
    spec = model.spec
    if not spec.arch:
        raise CheckpointError("model spec carries no architecture string")
    memory, activation = _spec_settings(spec)
    rebuilt = parse_arch(spec.arch, vocab_size=vocab.size, memory=memory,
                         hidden_activation=activation)
    if rebuilt != spec:
        raise CheckpointError(
            f"architecture string {spec.arch!r} does not reproduce this model's layer stack"
        )
    dtype_name = model.dtype.name
    if dtype_name not in _DTYPES:
        raise CheckpointError(f"unsupported model dtype {dtype_name}")

    named = model.named_params()
    entries = [(name, arr) for name, arr in named.items()]
    if state is not None:
        for name in named:
            if name in state.velocity:
                entries.append((f"v:{name}", state.velocity[name]))

    lines = [f"{MAGIC} {VERSION}"]
    lines.append(f"arch: {spec.arch}")
    lines.append(f"activation: {activation}")
    if memory is not None:
        lines.append(
            "memory: kind={kind} lookback={lookback} lookahead={lookahead} "
            "att_dim={att_dim} att_activation={att_activation}".format(**memory)
        )
    lines.append(f"dtype: {dtype_name}")
    if state is not None:
        lines.append(
            f"state: epoch={state.epoch} lr={state.lr!r} phase={state.phase} "
            f"halvings={state.halvings} best={state.best_valid_ppl!r} "
            f"prev={state.prev_valid_ppl!r} stop={int(state.stop)}"
        )
    lines.append(f"vocab: {vocab.size} unk={vocab.unk_id}")
    lines.extend(vocab.tokens)
    lines.append(f"tensors: {len(entries)}")
    for name, arr in entries:
        dims = ",".join(str(d) for d in arr.shape)
        lines.append(f"{name} {arr.dtype.name} {dims}")
    lines.append("end")

    with open(path, "wb") as fh:
        fh.write("\n".join(lines).encode("utf-8") + b"\n")
        for _, arr in entries:
            blob = np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes()
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def line(self):
        end = self.buf.find(b"\n", self.pos)
        if end < 0:
            raise CheckpointError("truncated checkpoint header")
        out = self.buf[self.pos : end].decode("utf-8")
        self.pos = end + 1
        return out

    def blob(self, size):
        if self.pos + size > len(self.buf):
            raise CheckpointError("truncated tensor data")
        out = self.buf[self.pos : self.pos + size]
        self.pos += size
        return out


def _field(line, prefix):
    if not line.startswith(prefix):
        raise CheckpointError(f"expected {prefix!r} line, found {line[:40]!r}")
    return line[len(prefix) :].strip()


def _kv(text):
    out = {}
    for item in text.split():
        k, _, v = item.partition("=")
        out[k] = v
    return out


def load_checkpoint(path):
    """Read a checkpoint; returns (model, vocab, state).

    state is None when the file was saved without one. The format version
    is verified before any tensor bytes are touched; manifest names and
    shapes must match the architecture exactly.
    """
    with open(path, "rb") as fh:
        rd = _Reader(fh.read())
    head = rd.line().split()
    if len(head) != 2 or head[0] != MAGIC:
        raise CheckpointError(f"not a checkpoint file: {path}")
    if head[1] != str(VERSION):
        raise CheckpointError(f"unsupported checkpoint version {head[1]} (expected {VERSION})")

    arch = _field(rd.line(), "arch:")
    activation = _field(rd.line(), "activation:")
    line = rd.line()
    memory = None
    if line.startswith("memory:"):
        kv = _kv(_field(line, "memory:"))
        memory = {
            "kind": kv["kind"],
            "lookback": int(kv["lookback"]),
            "lookahead": int(kv["lookahead"]),
            "att_dim": int(kv["att_dim"]),
            "att_activation": kv["att_activation"],
        }
        line = rd.line()
    dtype_name = _field(line, "dtype:")
    if dtype_name not in _DTYPES:
        raise CheckpointError(f"unsupported tensor dtype {dtype_name!r}")
    line = rd.line()
    state = None
    if line.startswith("state:"):
        kv = _kv(_field(line, "state:"))
        state = TrainState(
            lr=float(kv["lr"]),
            epoch=int(kv["epoch"]),
            phase=kv["phase"],
            halvings=int(kv["halvings"]),
            best_valid_ppl=float(kv["best"]),
            prev_valid_ppl=float(kv["prev"]),
            stop=bool(int(kv["stop"])),
        )
        line = rd.line()
    body = _field(line, "vocab:")
    kv = _kv(body)
    count = int(body.split()[0])
    unk_id = int(kv.get("unk", 0))
    tokens = tuple(rd.line() for _ in range(count))
    vocab = Vocab(tokens, unk_id=unk_id)

    spec = parse_arch(arch, vocab_size=vocab.size, memory=memory,
                      hidden_activation=activation)
    manifest = []
    count = int(_field(rd.line(), "tensors:"))
    for _ in range(count):
        parts = rd.line().split()
        if len(parts) != 3:
            raise CheckpointError(f"malformed tensor manifest line: {parts}")
        name, dt, dims = parts
        if dt != dtype_name:
            raise CheckpointError(f"tensor {name} dtype {dt} != checkpoint dtype {dtype_name}")
        shape = tuple(int(d) for d in dims.split(",")) if dims else ()
        manifest.append((name, shape))
    if rd.line() != "end":
        raise CheckpointError("tensor manifest not terminated")

    expected = param_shapes(spec)
    param_names = [n for n, _ in manifest if not n.startswith("v:")]
    if set(param_names) != set(expected):
        missing = set(expected) - set(param_names)
        extra = set(param_names) - set(expected)
        raise CheckpointError(
            f"tensor manifest does not match architecture (missing {sorted(missing)}, "
            f"unexpected {sorted(extra)})"
        )
    for name, shape in manifest:
        want = expected.get(name.removeprefix("v:"))
        if shape != want:
            raise CheckpointError(f"tensor {name} has shape {shape}, expected {want}")

    dtype = _DTYPES[dtype_name]
    tensors = {}
    for name, shape in manifest:
        (size,) = struct.unpack("<Q", rd.blob(8))
        n_items = 1
        for d in shape:
            n_items *= d
        if size != n_items * dtype.itemsize:
            raise CheckpointError(f"tensor {name} blob holds {size} bytes, expected "
                                  f"{n_items * dtype.itemsize}")
        arr = np.frombuffer(rd.blob(size), dtype=dtype).reshape(shape).copy()
        tensors[name] = arr

    params = [dict() for _ in spec.layers]
    for name, arr in tensors.items():
        if name.startswith("v:"):
            continue
        layer_tag, field = name.split(".", 1)
        params[int(layer_tag[1:])][field] = arr
    model = Model(spec, params, np.dtype(dtype_name))
    if state is not None:
        for name, arr in tensors.items():
            if name.startswith("v:"):
                state.velocity[name[2:]] = arr
    return model, vocab, state
