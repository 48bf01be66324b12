"""SGD with a validation-driven learning-rate schedule, plus evaluation
and the finite-difference gradient checker.

The schedule has two phases. While validation perplexity keeps improving
by at least `plateau_threshold` per epoch (against the best seen so far,
or the previous epoch if configured), the learning rate stays at its
initial value. The first epoch that falls short of that improvement
flips the state into the halving phase: the rate is halved before each
of the next `halving_epochs` epochs, after which training stops. The
rate never increases and the phase change is one-way.

The update rule is momentum SGD:

    v <- momentum * v - lr * (g + weight_decay * theta)
    theta <- theta + v

Weight decay skips biases and memory coefficients by default (decaying
taps would drag the identity-filter init toward zero); set
decay_all=True to apply it everywhere. Loss is the mean per frame within
a batch, so the learning rate does not need retuning with batch size.
"""

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .data import pack_minibatch
from .linalg import TrainingError, log_softmax, softmax_cross_entropy
from .network import build_model

NO_DECAY_FIELDS = ("b", "taps_back", "taps_ahead", "query_bias")


@dataclass
class TrainConfig:
    initial_lr: float = 0.4
    plateau_threshold: float = 1.0
    halving_epochs: int = 6
    momentum: float = 0.9
    weight_decay: float = 4e-5
    batch_size: int = 200
    max_epochs: int = 100
    seed: int = 0
    compare_to: str = "best"
    decay_all: bool = False
    clip_norm: float = 0.0

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be > 0, got {self.initial_lr}")
        if self.halving_epochs < 0:
            raise ValueError(f"halving_epochs must be >= 0, got {self.halving_epochs}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("batch_size must be >= 1 and max_epochs >= 0")
        if self.compare_to not in ("best", "prev"):
            raise ValueError(f"compare_to must be 'best' or 'prev', got {self.compare_to!r}")
        if self.clip_norm < 0:
            raise ValueError(f"clip_norm must be >= 0, got {self.clip_norm}")


@dataclass
class TrainState:
    """Mutable optimizer state carried across epochs."""

    lr: float
    epoch: int = 0
    phase: str = "plateau"
    halvings: int = 0
    best_valid_ppl: float = math.inf
    prev_valid_ppl: float = math.inf
    stop: bool = False
    velocity: dict = field(default_factory=dict)


def sgd_step(params, grads, state, cfg):
    """One momentum-SGD update, in place on the parameter arrays.

    params and grads are matching name->array dicts (model.named_params
    and Model.backward output). Velocity buffers live in state.velocity
    under the same names. A non-finite gradient raises TrainingError
    naming the tensor before anything is modified.
    """
    for name in params:
        if name not in grads:
            raise TrainingError(f"no gradient supplied for tensor {name}")
        if not np.isfinite(grads[name]).all():
            raise TrainingError(f"non-finite gradient in tensor {name}")
    scale = 1.0
    if cfg.clip_norm > 0:
        total = math.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))
        if total > cfg.clip_norm:
            scale = cfg.clip_norm / total
    for name, theta in params.items():
        g = grads[name] * scale if scale != 1.0 else grads[name]
        if cfg.weight_decay and (cfg.decay_all or not _decay_exempt(name)):
            g = g + cfg.weight_decay * theta
        v = state.velocity.get(name)
        if v is None:
            v = np.zeros_like(theta)
            state.velocity[name] = v
        v *= cfg.momentum
        v -= state.lr * g
        theta += v


def _decay_exempt(name):
    return name.rsplit(".", 1)[-1] in NO_DECAY_FIELDS


def lr_schedule_update(state, new_valid_ppl, cfg):
    """Advance the schedule after one epoch's validation, in place.

    Sets state.lr for the NEXT epoch and state.stop once the halving
    phase has run its course; returns the state for convenience.
    """
    if not math.isfinite(new_valid_ppl):
        raise TrainingError(f"validation perplexity is not finite: {new_valid_ppl}")
    if state.phase == "plateau":
        ref = state.best_valid_ppl if cfg.compare_to == "best" else state.prev_valid_ppl
        if ref - new_valid_ppl < cfg.plateau_threshold:
            state.phase = "halving"
            if cfg.halving_epochs == 0:
                state.stop = True
            else:
                state.lr /= 2.0
    else:
        state.halvings += 1
        if state.halvings >= cfg.halving_epochs:
            state.stop = True
        else:
            state.lr /= 2.0
    state.best_valid_ppl = min(state.best_valid_ppl, new_valid_ppl)
    state.prev_valid_ppl = new_valid_ppl
    state.epoch += 1
    return state


def perplexity(model, corpus, batch_size=64):
    """exp of the mean per-token negative log-likelihood over the corpus.

    Natural log throughout; every frame weighs the same. Logits are
    computed at model precision, the log-softmax and the accumulation in
    double. The result does not depend on sentence order or batching.
    """
    window = model.spec.input_window
    if window < 1:
        raise ValueError("perplexity needs a token model (projection layer first)")
    seqs = corpus.sequences if hasattr(corpus, "sequences") else list(corpus)
    if not seqs:
        raise ValueError("empty corpus")
    pad = model.params[0]["table"].shape[0] - 1
    total_nll = 0.0
    frames = 0
    for batch in pack_minibatch(corpus, batch_size, None, window, pad):
        logits, _ = model.forward(batch)
        logp = log_softmax(logits.astype(np.float64))
        total_nll -= float(logp[batch.targets, np.arange(batch.frames)].sum())
        frames += batch.frames
    return math.exp(total_nll / frames)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    valid_ppl: float


def history_to_csv(history):
    """Render epoch records as `epoch,lr,train_loss,valid_ppl` CSV text."""
    lines = ["epoch,lr,train_loss,valid_ppl"]
    for rec in history:
        lines.append(f"{rec.epoch},{rec.lr!r},{rec.train_loss!r},{rec.valid_ppl!r}")
    return "\n".join(lines) + "\n"


@dataclass
class TrainResult:
    model: object
    history: list
    state: TrainState
    diverged: bool = False


def train_loop(spec, train_corpus, valid_corpus, cfg, dtype=np.float32,
               tap_jitter=0.0, epoch_callback=None):
    """Full training run: per epoch, one pass over shuffled train batches,
    then validation perplexity, then the schedule update.

    Deterministic for fixed (spec, corpus, cfg, dtype): initialization
    and the per-epoch shuffles all derive from cfg.seed. If validation
    blows up (non-finite perplexity or a non-finite gradient mid-epoch),
    the parameters roll back to the end of the last good epoch and the
    run stops with diverged=True. epoch_callback(model, state, record)
    fires after each completed epoch.
    """
    model = build_model(spec, dtype, cfg.seed, tap_jitter)
    state = TrainState(lr=cfg.initial_lr)
    history = []
    window = spec.input_window
    if window < 1:
        raise ValueError("train_loop needs a token model (projection layer first)")
    pad = model.params[0]["table"].shape[0] - 1
    for _ in range(cfg.max_epochs):
        snapshot = (copy.deepcopy(model.params), copy.deepcopy(state.velocity))
        lr_this_epoch = state.lr
        loss_sum = 0.0
        frames = 0
        try:
            for batch in pack_minibatch(
                train_corpus, cfg.batch_size, (cfg.seed, state.epoch), window, pad
            ):
                logits, trace = model.forward(batch)
                loss, lgrad = softmax_cross_entropy(logits, batch.targets)
                grads = model.backward(trace, lgrad)
                sgd_step(model.named_params(), grads, state, cfg)
                loss_sum += loss * batch.frames
                frames += batch.frames
            valid_ppl = perplexity(model, valid_corpus)
            if not math.isfinite(valid_ppl):
                raise TrainingError(f"validation perplexity diverged: {valid_ppl}")
        except TrainingError:
            model.params, state.velocity = snapshot
            return TrainResult(model, history, state, diverged=True)
        record = EpochRecord(state.epoch, lr_this_epoch, loss_sum / max(frames, 1), valid_ppl)
        history.append(record)
        lr_schedule_update(state, valid_ppl, cfg)
        if epoch_callback is not None:
            epoch_callback(model, state, record)
        if state.stop:
            break
    return TrainResult(model, history, state)


def grad_check(model, batch, targets=None, epsilon=1e-5, sample=0, seed=0):
    """Analytic gradients vs central finite differences of the CE loss.

    Returns {tensor name: max relative error}. The relative error of one
    entry is |numeric - analytic| / max(|numeric| + |analytic|, 1e-8),
    with disagreements under 1e-9 absolute counted as zero since they
    sit at the noise floor of central differences on a double-precision
    loss. With sample > 0, tensors holding more entries than that are
    probed at a seeded random subset instead of exhaustively.
    """
    if targets is None:
        targets = batch.targets
    targets = np.asarray(targets)
    rng = np.random.default_rng(seed)

    def loss_now():
        logits, _ = model.forward(batch)
        return softmax_cross_entropy(logits, targets)[0]

    logits, trace = model.forward(batch)
    _, lgrad = softmax_cross_entropy(logits, targets)
    grads = model.backward(trace, lgrad)
    report = {}
    for name, arr in model.named_params().items():
        ana = grads[name]
        if arr.size == 0:
            report[name] = 0.0
            continue
        flat = arr.reshape(-1)
        ana_flat = ana.reshape(-1)
        if 0 < sample < flat.size:
            picks = rng.choice(flat.size, size=sample, replace=False)
        else:
            picks = range(flat.size)
        worst = 0.0
        for idx in picks:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            up = loss_now()
            flat[idx] = orig - epsilon
            down = loss_now()
            flat[idx] = orig
            num = (up - down) / (2.0 * epsilon)
            diff = abs(num - ana_flat[idx])
            if diff < 1e-9:
                continue
            worst = max(worst, diff / max(abs(num) + abs(ana_flat[idx]), 1e-8))
        report[name] = worst
    return report
