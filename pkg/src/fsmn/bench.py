"""Timing comparisons on synthetic data.

Two families of rows:

    encode-*     one memory-block encoding of a (dim, frames) matrix:
                 the per-timestep reference loop, the dense product
                 against the materialized band matrix, and the tap-walk
                 kernel on each available backend. Each row carries the
                 max abs deviation from the reference loop, so the
                 timings double as an equivalence check.
    epoch-*      one synthetic training epoch (forward, loss, backward,
                 update over a fixed frame budget) for a memory model
                 and for the recurrent baseline with the same layer
                 sizes.

All timings are best-of-N wall clock; sizes are small enough to finish
in seconds while still separating the paths clearly.
"""

import time

import numpy as np

from . import kernels, memory
from .linalg import softmax_cross_entropy
from .network import build_model, parse_arch
from .training import TrainConfig, TrainState, sgd_step


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def encode_rows(dim=64, frame_counts=(32, 128, 512), lookback=20, lookahead=0,
                seed=0, repeats=3):
    """Rows (variant, frames, seconds, max_abs_diff_vs_reference)."""
    rng = np.random.default_rng(seed)
    cfg = memory.MemoryConfig("scalar", lookback, lookahead, dim)
    params = memory.init_memory_params(cfg, np.float64, rng, tap_jitter=0.05)
    rows = []
    for frames in frame_counts:
        hidden = rng.standard_normal((dim, frames))
        ref = memory.encode_naive(hidden, cfg, params)
        rows.append(("encode-naive", frames,
                     _best_of(lambda: memory.encode_naive(hidden, cfg, params), repeats), 0.0))
        band = memory.band_matrix(cfg, params, frames)
        out = memory.encode_banded(hidden, band)
        rows.append(("encode-banded", frames,
                     _best_of(lambda: memory.encode_banded(hidden, band), repeats),
                     float(np.abs(out - ref).max())))
        backends = ["numpy"]
        if kernels.BACKEND == "compiled":
            backends.append("compiled")
        for impl in backends:
            out = kernels.encode_scalar(hidden, params.taps_back, params.taps_ahead, impl=impl)
            rows.append((f"encode-walk-{impl}", frames,
                         _best_of(lambda: kernels.encode_scalar(
                             hidden, params.taps_back, params.taps_ahead, impl=impl), repeats),
                         float(np.abs(out - ref).max())))
    return rows


def epoch_rows(dim=64, frame_counts=(32, 128, 512), lookback=20, seqs_per_batch=4,
               batches=3, seed=0, repeats=2):
    """Rows (variant, frames, seconds, "") for matched-size models."""
    rng = np.random.default_rng(seed)
    out_classes = 32
    specs = {
        "epoch-memory": parse_arch(
            f"{dim}-{dim}(M)-{dim}-{out_classes}",
            memory={"kind": "scalar", "lookback": lookback, "lookahead": 0},
        ),
        "epoch-recurrent": parse_arch(f"{dim}-{dim}(R)-{dim}-{out_classes}"),
    }
    rows = []
    for frames in frame_counts:
        lengths = (frames,) * seqs_per_batch
        feed = [
            (rng.standard_normal((dim, frames * seqs_per_batch)).astype(np.float32),
             rng.integers(0, out_classes, size=frames * seqs_per_batch))
            for _ in range(batches)
        ]
        for variant, spec in specs.items():
            model = build_model(spec, np.float32, seed=seed, tap_jitter=0.05)
            cfg = TrainConfig(initial_lr=0.01, momentum=0.9, weight_decay=0.0, batch_size=1)
            state = TrainState(lr=cfg.initial_lr)

            def one_epoch():
                for features, targets in feed:
                    batch = _FrameBatch(features, lengths)
                    logits, trace = model.forward(batch)
                    _, lgrad = softmax_cross_entropy(logits, targets)
                    grads = model.backward(trace, lgrad)
                    sgd_step(model.named_params(), grads, state, cfg)

            rows.append((variant, frames, _best_of(one_epoch, repeats), ""))
    return rows


class _FrameBatch:
    def __init__(self, inputs, lengths):
        self.inputs = inputs
        self.lengths = lengths


def run(dim=64, frame_counts=(32, 128, 512), lookback=20, seed=0):
    """All benchmark rows, encode family then epoch family."""
    rows = encode_rows(dim, frame_counts, lookback, seed=seed)
    rows += epoch_rows(dim, frame_counts, lookback, seed=seed)
    return rows


def to_csv(rows):
    lines = ["variant,frames,seconds,max_abs_diff"]
    for variant, frames, seconds, diff in rows:
        d = "" if diff == "" else f"{diff:.3e}"
        lines.append(f"{variant},{frames},{seconds:.6f},{d}")
    return "\n".join(lines) + "\n"
