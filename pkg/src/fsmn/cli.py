"""Command-line front end: train, eval, gradcheck, dump-filters, bench.

Every option can also come from a config file of `key = value` lines
(`#` starts a comment; keys are the long flag names, dashes or
underscores both accepted). Explicit flags win over the file, the file
wins over built-in defaults.

Heavy imports happen inside the command handlers so that --threads can
pin the BLAS/OpenMP thread count in the environment before numpy first
loads; --threads 1 is the fully deterministic mode the test suite and
the determinism guarantees assume.
"""

import argparse
import os
import sys


def _numeric(conv):
    def parse(text):
        return conv(text)

    return parse


def _boolish(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot read {text!r} as a boolean")


# option table rows: (flags, dest, converter, default, choices, help)
_COMMON = [
    (("--config",), "config", str, None, None, "key = value option file"),
    (("--seed",), "seed", int, 0, None, "random seed"),
    (("--threads",), "threads", int, None, None,
     "BLAS/OpenMP thread count; 1 = deterministic mode"),
    (("--precision",), "precision", str, "f32", ("f32", "f64"), "compute precision"),
]

_ARCH = [
    (("--arch",), "arch", str, None, None, "architecture string, e.g. [2*200]-400(M)-400-V"),
    (("--activation",), "activation", str, "relu", ("relu", "tanh", "sigmoid", "linear"),
     "hidden-layer activation"),
    (("--memory",), "memory", str, "vector", ("scalar", "vector", "attention"),
     "memory block kind at every (M) mark"),
    (("--lookback",), "lookback", int, 20, None, "memory lookback order"),
    (("--lookahead",), "lookahead", int, 0, None, "memory lookahead order"),
    (("--att-dim",), "att_dim", int, 0, None, "attention map width (attention kind)"),
    (("--att-activation",), "att_activation", str, "relu", ("relu", "tanh", "linear"),
     "attention map activation"),
    (("--tap-jitter",), "tap_jitter", float, 0.0, None,
     "uniform perturbation half-width on initial memory taps"),
]

_TRAIN = _COMMON + _ARCH + [
    (("--train",), "train", str, None, None, "training text, one sentence per line"),
    (("--valid",), "valid", str, None, None, "validation text"),
    (("--test",), "test", str, None, None, "test text (optional)"),
    (("--vocab-size",), "vocab_size", int, 10000, None, "maximum vocabulary size"),
    (("--eos",), "eos", str, None, None,
     "end-of-sentence token appended to every sentence (given a vocab slot)"),
    (("--lr",), "lr", float, 0.4, None, "initial learning rate"),
    (("--momentum",), "momentum", float, 0.9, None, "momentum coefficient"),
    (("--weight-decay",), "weight_decay", float, 4e-5, None, "weight decay"),
    (("--batch-size",), "batch_size", int, 200, None, "sentences per mini-batch"),
    (("--epochs",), "epochs", int, 50, None, "maximum training epochs"),
    (("--plateau-threshold",), "plateau_threshold", float, 1.0, None,
     "required per-epoch validation perplexity improvement"),
    (("--halving-epochs",), "halving_epochs", int, 6, None,
     "epochs to run with halving rate after the plateau ends"),
    (("--compare-to",), "compare_to", str, "best", ("best", "prev"),
     "improvement is measured against this perplexity"),
    (("--clip-norm",), "clip_norm", float, 0.0, None, "global gradient-norm clip, 0 = off"),
    (("--decay-all",), "decay_all", _boolish, False, None,
     "apply weight decay to taps and biases too"),
    (("--out",), "out", str, None, None, "output directory"),
]

_EVAL = _COMMON + [
    (("--checkpoint",), "checkpoint", str, None, None, "checkpoint file"),
    (("--data",), "data", str, None, None, "text to evaluate"),
    (("--eos",), "eos", str, None, None, "end-of-sentence token used at training time"),
    (("--vocab",), "vocab", str, None, None,
     "vocabulary file to cross-check against the checkpoint"),
    (("--batch-size",), "batch_size", int, 64, None, "sentences per evaluation batch"),
]

_GRADCHECK = _COMMON + [
    (("--threshold",), "threshold", float, 1e-6, None, "max acceptable relative error"),
    (("--epsilon",), "epsilon", float, 1e-5, None, "central-difference step"),
    (("--sample",), "sample", int, 0, None,
     "probe at most this many entries per tensor (0 = all)"),
]

_DUMP = _COMMON + [
    (("--checkpoint",), "checkpoint", str, None, None, "checkpoint file"),
    (("--layer",), "layer", int, None, None,
     "layer index holding the memory block (default: first one found)"),
    (("--out",), "out", str, None, None, "output CSV file (default stdout)"),
]

_BENCH = _COMMON + [
    (("--dim",), "dim", int, 64, None, "hidden width of the benchmark models"),
    (("--frames",), "frames", str, "32,128,512", None, "comma-separated sequence lengths"),
    (("--lookback",), "lookback", int, 20, None, "memory lookback order"),
    (("--out",), "out", str, None, None, "output CSV file (default stdout)"),
]

_REQUIRED = {
    "train": ("arch", "train", "valid", "out"),
    "eval": ("checkpoint", "data"),
    "gradcheck": (),
    "dump-filters": ("checkpoint",),
    "bench": (),
}

_TABLES = {
    "train": _TRAIN,
    "eval": _EVAL,
    "gradcheck": _GRADCHECK,
    "dump-filters": _DUMP,
    "bench": _BENCH,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fsmn",
        description="Train and evaluate feedforward sequence models with memory blocks.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for command, table in _TABLES.items():
        sp = subs.add_parser(command)
        for flags, dest, conv, default, choices, help_ in table:
            kwargs = {"dest": dest, "default": None, "help": help_}
            if default is not None:
                kwargs["help"] += f" (default {default})"
            if conv is _boolish:
                kwargs["nargs"] = "?"
                kwargs["const"] = "true"
            sp.add_argument(*flags, **kwargs)
    return parser


def _read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected `key = value`, found {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args):
    """Merge flags, config file, and defaults; convert and validate."""
    table = _TABLES[args.command]
    fileconf = {}
    if args.config is not None:
        fileconf = _read_config(args.config)
    known = {dest for _, dest, *_rest in table}
    for key in fileconf:
        if key not in known:
            raise ValueError(f"unknown config key {key!r} for command {args.command}")
    out = argparse.Namespace(command=args.command)
    for _, dest, conv, default, choices, _h in table:
        raw = getattr(args, dest)
        if raw is None and dest in fileconf:
            raw = fileconf[dest]
        if raw is None:
            value = default
        else:
            value = conv(raw) if isinstance(raw, str) else raw
        if choices and value is not None and value not in choices:
            raise ValueError(f"--{dest.replace('_', '-')} must be one of {choices}, got {value!r}")
        setattr(out, dest, value)
    for dest in _REQUIRED[args.command]:
        if getattr(out, dest) is None:
            raise ValueError(f"--{dest.replace('_', '-')} is required for {args.command}")
    return out


def _apply_threads(n):
    if n is None:
        return
    if n < 1:
        raise ValueError(f"--threads must be >= 1, got {n}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def _dtype(precision):
    import numpy as np

    return np.float64 if precision == "f64" else np.float32


def _memory_settings(args):
    return {
        "kind": args.memory,
        "lookback": args.lookback,
        "lookahead": args.lookahead,
        "att_dim": args.att_dim,
        "att_activation": args.att_activation,
    }


def cmd_train(args):
    from . import checkpoint as ckpt
    from . import data, network, training

    for path in (args.train, args.valid) + ((args.test,) if args.test else ()):
        if not os.path.isfile(path):
            print(f"fsmn train: no such file: {path}", file=sys.stderr)
            return 1
    os.makedirs(args.out, exist_ok=True)
    extras = (args.eos,) if args.eos else ()
    train_lines = data.read_lines(args.train)
    vocab = data.build_vocab(train_lines, args.vocab_size, extras=extras)
    data.save_vocab(vocab, os.path.join(args.out, "vocab.txt"))
    train_c = data.encode_corpus(train_lines, vocab, "train", eos=args.eos)
    valid_c = data.encode_corpus(data.read_lines(args.valid), vocab, "valid", eos=args.eos)
    test_c = None
    if args.test:
        test_c = data.encode_corpus(data.read_lines(args.test), vocab, "test", eos=args.eos)

    try:
        spec = network.parse_arch(args.arch, vocab_size=vocab.size,
                                  memory=_memory_settings(args),
                                  hidden_activation=args.activation)
    except ValueError as exc:
        print(f"fsmn train: bad architecture: {exc}", file=sys.stderr)
        return 1
    cfg = training.TrainConfig(
        initial_lr=args.lr,
        plateau_threshold=args.plateau_threshold,
        halving_epochs=args.halving_epochs,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        seed=args.seed,
        compare_to=args.compare_to,
        decay_all=args.decay_all,
        clip_norm=args.clip_norm,
    )

    def on_epoch(model, state, record):
        path = os.path.join(args.out, f"epoch-{record.epoch:03d}.ckpt")
        ckpt.save_checkpoint(path, model, vocab, state)
        print(f"epoch {record.epoch} lr {record.lr:g} train_loss {record.train_loss:.4f} "
              f"valid_ppl {record.valid_ppl:.2f}", file=sys.stderr)

    result = training.train_loop(spec, train_c, valid_c, cfg, dtype=_dtype(args.precision),
                                 tap_jitter=args.tap_jitter, epoch_callback=on_epoch)
    with open(os.path.join(args.out, "history.csv"), "w", encoding="utf-8") as fh:
        fh.write(training.history_to_csv(result.history))
    if result.diverged:
        print("fsmn train: training diverged; parameters rolled back to the last "
              "good epoch", file=sys.stderr)
        return 1
    ckpt.save_checkpoint(os.path.join(args.out, "final.ckpt"), result.model, vocab,
                         result.state)
    if result.history:
        print(f"valid ppl {result.history[-1].valid_ppl:.2f}")
    if test_c is not None:
        ppl = training.perplexity(result.model, test_c)
        print(f"test ppl {ppl:.2f}")
    return 0


def cmd_eval(args):
    from . import checkpoint as ckpt
    from . import data, training

    if not os.path.isfile(args.data):
        print(f"fsmn eval: no such file: {args.data}", file=sys.stderr)
        return 1
    model, vocab, _state = ckpt.load_checkpoint(args.checkpoint)
    if args.vocab:
        other = data.load_vocab(args.vocab)
        if other.tokens != vocab.tokens or other.unk_id != vocab.unk_id:
            print("fsmn eval: vocabulary file does not match the checkpoint's "
                  "vocabulary", file=sys.stderr)
            return 1
    corpus = data.encode_corpus(data.read_lines(args.data), vocab, eos=args.eos)
    ppl = training.perplexity(model, corpus, batch_size=args.batch_size)
    print(f"{ppl:.2f}")
    return 0


def _gradcheck_cases(seed, dtype):
    import numpy as np

    from . import data, network

    rng = np.random.default_rng(seed)
    cases = []

    def frame_case(tag, arch, memory):
        spec = network.parse_arch(arch, memory=memory, hidden_activation="tanh")
        model = network.build_model(spec, dtype, seed=seed, tap_jitter=0.35)
        in_dim = spec.layers[0].in_dim
        frames = 8
        batch = data.PackedBatch(
            rng.standard_normal((in_dim, frames)),
            rng.integers(0, spec.layers[-1].vocab, size=frames),
            (5, 3),
        )
        cases.append((tag, model, batch))

    frame_case("sfsmn-uni", "5-6(M)-6(M)-6-7",
               {"kind": "scalar", "lookback": 3, "lookahead": 0})
    frame_case("sfsmn-bi", "5-6(M)-6(M)-6-7",
               {"kind": "scalar", "lookback": 2, "lookahead": 2})
    frame_case("vfsmn-uni", "5-6(M)-6(M)-6-7",
               {"kind": "vector", "lookback": 3, "lookahead": 0})
    frame_case("vfsmn-bi", "5-6(M)-6(M)-6-7",
               {"kind": "vector", "lookback": 2, "lookahead": 2})
    frame_case("attention", "5-6(M)-6-7",
               {"kind": "attention", "lookback": 3, "lookahead": 2,
                "att_dim": 4, "att_activation": "tanh"})
    frame_case("rnn-baseline", "5-6(R)-6-7", None)
    return cases


def cmd_gradcheck(args):
    from . import training

    # finite differences need double precision to reach the default threshold,
    # so the check always runs in f64 regardless of --precision
    dtype = _dtype("f64")
    failures = 0
    for tag, model, batch in _gradcheck_cases(args.seed, dtype):
        report = training.grad_check(model, batch, epsilon=args.epsilon,
                                     sample=args.sample, seed=args.seed)
        for name, err in report.items():
            ok = err <= args.threshold
            failures += 0 if ok else 1
            print(f"{tag} {name} {err:.3e} {'ok' if ok else 'FAIL'}")
    if failures:
        print(f"fsmn gradcheck: {failures} tensor(s) over threshold "
              f"{args.threshold:g}", file=sys.stderr)
        return 1
    return 0


def cmd_dump_filters(args):
    import numpy as np

    from . import checkpoint as ckpt

    model, _vocab, _state = ckpt.load_checkpoint(args.checkpoint)
    candidates = [
        i for i, lay in enumerate(model.spec.layers)
        if getattr(lay, "mem", None) is not None
    ]
    index = args.layer if args.layer is not None else (candidates[0] if candidates else None)
    if index is None or index not in candidates:
        print(f"fsmn dump-filters: layer {args.layer} has no memory block "
              f"(memory layers: {candidates})", file=sys.stderr)
        return 1
    lay = model.spec.layers[index]
    if lay.mem.kind == "attention":
        print("fsmn dump-filters: attention coefficients are context-dependent; "
              "there is no fixed filter to dump", file=sys.stderr)
        return 1
    pset = model.params[index]
    back, ahead = pset["taps_back"], pset["taps_ahead"]
    lines = []
    if lay.mem.kind == "scalar":
        lines.append("offset,value")
        for j in range(lay.mem.lookahead, 0, -1):
            lines.append(f"{-j},{float(ahead[j - 1])!r}")
        for i in range(lay.mem.lookback + 1):
            lines.append(f"{i},{float(back[i])!r}")
    else:
        dim = lay.mem.dim
        lines.append("offset," + ",".join(f"d{k}" for k in range(dim)) + ",mean")

        def row(offset, vec):
            vals = ",".join(repr(float(v)) for v in vec)
            return f"{offset},{vals},{float(np.mean(vec))!r}"

        for j in range(lay.mem.lookahead, 0, -1):
            lines.append(row(-j, ahead[j - 1]))
        for i in range(lay.mem.lookback + 1):
            lines.append(row(i, back[i]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_bench(args):
    from . import bench

    frames = tuple(int(v) for v in args.frames.split(","))
    rows = bench.run(dim=args.dim, frame_counts=frames, lookback=args.lookback,
                     seed=args.seed)
    text = bench.to_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_HANDLERS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "dump-filters": cmd_dump_filters,
    "bench": cmd_bench,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = _resolve(args)
        _apply_threads(getattr(resolved, "threads", None))
        return _HANDLERS[resolved.command](resolved)
    except (ValueError, OSError) as exc:
        print(f"fsmn {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # checkpoint/training errors carry their own story
        name = type(exc).__name__
        if name in ("CheckpointError", "TrainingError", "ShapeError", "UsageError"):
            print(f"fsmn {args.command}: {exc}", file=sys.stderr)
            return 1
        raise


if __name__ == "__main__":
    sys.exit(main())
