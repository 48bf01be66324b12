"""Sequence modeling with tapped-delay memory layers.

Feedforward networks whose hidden layers carry learnable FIR-style
memory blocks over past (and optionally future) frames, plus a simple
recurrent baseline, a word-level language-model pipeline, SGD training
with a validation-driven learning-rate schedule, and a command-line
front end. See README.md for the architecture-string notation and the
file formats.

Submodules are imported on first attribute access so that importing the
package itself stays cheap and, importantly, so the command-line entry
point can pin thread counts in the environment before numpy loads.
"""

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    # linalg
    "ShapeError": "linalg",
    "TrainingError": "linalg",
    "matmul": "linalg",
    "relu": "linalg",
    "relu_backward": "linalg",
    "sigmoid": "linalg",
    "softmax": "linalg",
    "log_softmax": "linalg",
    "softmax_cross_entropy": "linalg",
    "rng_uniform": "linalg",
    "glorot_uniform": "linalg",
    "apply_activation": "linalg",
    "activation_backward": "linalg",
    # kernels
    "BACKEND": "kernels",
    # memory
    "MemoryConfig": "memory",
    "MemoryParams": "memory",
    "init_memory_params": "memory",
    "BandMatrix": "memory",
    "band_matrix": "memory",
    "batch_band": "memory",
    "encode_naive": "memory",
    "encode_banded": "memory",
    "encode": "memory",
    "encode_backward": "memory",
    "scalar_backward": "memory",
    "attention_coeffs": "memory",
    "attention_encode": "memory",
    "attention_backward": "memory",
    # network
    "Projection": "network",
    "Dense": "network",
    "FsmnHidden": "network",
    "RnnBaseline": "network",
    "Output": "network",
    "ModelSpec": "network",
    "Model": "network",
    "UsageError": "network",
    "parse_arch": "network",
    "build_model": "network",
    "param_shapes": "network",
    "fsmn_layer_forward": "network",
    "rnn_layer_forward": "network",
    "receptive_field": "network",
    # data
    "Vocab": "data",
    "Corpus": "data",
    "PackedBatch": "data",
    "build_vocab": "data",
    "save_vocab": "data",
    "load_vocab": "data",
    "encode_corpus": "data",
    "make_lm_frames": "data",
    "pack_minibatch": "data",
    "synthetic_topic_lines": "data",
    # training
    "TrainConfig": "training",
    "TrainState": "training",
    "TrainResult": "training",
    "EpochRecord": "training",
    "sgd_step": "training",
    "lr_schedule_update": "training",
    "perplexity": "training",
    "train_loop": "training",
    "grad_check": "training",
    "history_to_csv": "training",
    # checkpoint
    "CheckpointError": "checkpoint",
    "save_checkpoint": "checkpoint",
    "load_checkpoint": "checkpoint",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        modname = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    value = getattr(importlib.import_module("." + modname, __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
