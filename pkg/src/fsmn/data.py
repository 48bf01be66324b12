"""Corpus ingestion and batching for language-model training.

Text comes in as UTF-8 plain text, one sentence per line, whitespace
tokenized; nothing is lowercased or normalized. A Vocab maps tokens to
dense ids with the unknown token at id 0. The sequence-start padding id
sits one past the vocabulary (vocab.bos_id == vocab.size): the embedding
table has a row for it, but it is never a prediction target and never
appears inside an encoded sequence.

Frames: predicting position t of a sentence uses the `window` previous
words as input (padded with the start id at the head), the word at t as
the target, so a sentence of T words yields exactly T frames. Batches
pack whole sentences side by side along the frame axis and carry the
per-sentence lengths so downstream memory blocks never mix sentences.
"""

import collections
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Vocab:
    """Token/id bijection with a dedicated unknown token."""

    tokens: tuple
    unk_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "_ids", {t: i for i, t in enumerate(self.tokens)})
        if len(self._ids) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        if not 0 <= self.unk_id < len(self.tokens):
            raise ValueError(f"unk_id {self.unk_id} outside vocabulary of {len(self.tokens)}")

    @property
    def size(self):
        return len(self.tokens)

    @property
    def bos_id(self):
        """Sequence-start padding id, one past the last real token."""
        return len(self.tokens)

    def id_of(self, token):
        return self._ids.get(token, self.unk_id)

    def __contains__(self, token):
        return token in self._ids

    def decode(self, ids):
        return [self.tokens[i] for i in ids]


def build_vocab(lines, max_size, unk_token="<unk>", extras=()):
    """Frequency vocabulary over a token stream.

    Keeps the most frequent tokens up to max_size total entries, with the
    unknown token always at id 0 and any `extras` (tokens that must exist
    regardless of frequency, e.g. an end-of-sentence mark) guaranteed a
    slot. Frequency ties break lexicographically so rebuilding from the
    same text gives the same ids. A literal occurrence of the unknown
    token in the text folds onto id 0 instead of taking a second slot.
    """
    if max_size < 1 + len(extras):
        raise ValueError(f"max_size {max_size} cannot hold unk and {len(extras)} extras")
    counts = collections.Counter()
    for line in lines:
        counts.update(line.split())
    counts.pop(unk_token, None)
    for extra in extras:
        counts.pop(extra, None)
    if not counts and not extras:
        raise ValueError("empty token stream")
    budget = max_size - 1 - len(extras)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, _ in ranked[:budget]]
    return Vocab((unk_token, *kept, *extras))


def save_vocab(vocab, path):
    """One token per line; the line number is the id."""
    with open(path, "w", encoding="utf-8") as fh:
        for token in vocab.tokens:
            fh.write(token + "\n")


def load_vocab(path, unk_token="<unk>"):
    with open(path, encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh]
    while tokens and tokens[-1] == "":
        tokens.pop()
    if unk_token not in tokens:
        raise ValueError(f"vocabulary file {path} lacks the unknown token {unk_token!r}")
    return Vocab(tuple(tokens), unk_id=tokens.index(unk_token))


@dataclass
class Corpus:
    """Encoded sentences (one int64 id array each) with a split tag."""

    sequences: list
    split: str = ""

    def __post_init__(self):
        for i, seq in enumerate(self.sequences):
            if len(seq) == 0:
                raise ValueError(f"sequence {i} is empty")

    @property
    def tokens(self):
        return int(sum(len(s) for s in self.sequences))

    def __len__(self):
        return len(self.sequences)


def encode_corpus(lines, vocab, split="", eos=None):
    """Encode text lines with a vocabulary; OOV tokens become unk.

    Blank lines are dropped. When `eos` names a vocabulary token, its id
    is appended to every sentence so the model learns to end them.
    """
    eos_id = None
    if eos is not None:
        if eos not in vocab:
            raise ValueError(f"end-of-sentence token {eos!r} is not in the vocabulary")
        eos_id = vocab.id_of(eos)
    sequences = []
    for line in lines:
        toks = line.split()
        if not toks:
            continue
        ids = [vocab.id_of(t) for t in toks]
        if eos_id is not None:
            ids.append(eos_id)
        sequences.append(np.asarray(ids, dtype=np.int64))
    return Corpus(sequences, split)


def read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.readlines()


def make_lm_frames(seq, window, pad_id):
    """Input/target frames of one sentence.

    Position t's input column holds the `window` previous word ids, row 0
    the oldest; positions before the sentence head are the padding id.
    Targets are the words themselves, one per frame.
    """
    if window < 1:
        raise ValueError(f"context window must be >= 1, got {window}")
    seq = np.asarray(seq, dtype=np.int64)
    if seq.ndim != 1 or len(seq) == 0:
        raise ValueError("sequence must be a non-empty 1-D id array")
    frames = len(seq)
    inputs = np.full((window, frames), pad_id, dtype=np.int64)
    for r in range(window):
        back = window - r
        if frames > back:
            inputs[r, back:] = seq[:-back]
    return inputs, seq.copy()


@dataclass
class PackedBatch:
    """K sentences' frames laid side by side along one frame axis."""

    inputs: np.ndarray
    targets: np.ndarray
    lengths: tuple

    def __post_init__(self):
        total = int(sum(self.lengths))
        if any(v <= 0 for v in self.lengths):
            raise ValueError(f"lengths must be positive, got {self.lengths}")
        if self.inputs.shape[-1] != total or self.targets.shape != (total,):
            raise ValueError(
                f"frame counts disagree: inputs {self.inputs.shape}, "
                f"targets {self.targets.shape}, lengths sum {total}"
            )

    @property
    def frames(self):
        return int(self.targets.shape[0])


def pack_minibatch(corpus, batch_size, shuffle_seed=None, window=2, pad_id=None):
    """Yield PackedBatch objects covering the corpus once.

    Sentences are shuffled with the given seed (None keeps corpus order,
    which evaluation uses), then grouped batch_size at a time; the final
    short group is emitted as-is. pad_id defaults to one past the largest
    id in the corpus only when omitted; LM callers pass vocab.bos_id.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    seqs = corpus.sequences if isinstance(corpus, Corpus) else list(corpus)
    if pad_id is None:
        pad_id = int(max(int(s.max()) for s in seqs)) + 1
    order = np.arange(len(seqs))
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(seqs))
    for lo in range(0, len(seqs), batch_size):
        group = [seqs[i] for i in order[lo : lo + batch_size]]
        parts = [make_lm_frames(s, window, pad_id) for s in group]
        inputs = np.concatenate([p[0] for p in parts], axis=1)
        targets = np.concatenate([p[1] for p in parts])
        yield PackedBatch(inputs, targets, tuple(len(s) for s in group))


def synthetic_topic_lines(n_sentences, seed, n_topics=10, content_words=60,
                          min_len=6, max_len=18, concentration=0.25):
    """Deterministic topic-marked text for experiments without a corpus.

    Every sentence opens with its topic's marker token; the remaining
    words are drawn from a topic-specific distribution over a shared
    content pool. Single words therefore carry only weak topic evidence,
    while the marker at the head carries all of it, so models able to
    look back past a short context window have a real advantage.
    """
    rng = np.random.default_rng(seed)
    topic_dists = rng.dirichlet([concentration] * content_words, size=n_topics)
    words = [f"w{i}" for i in range(content_words)]
    lines = []
    for _ in range(n_sentences):
        k = int(rng.integers(n_topics))
        length = int(rng.integers(min_len, max_len + 1))
        body = rng.choice(words, size=length, p=topic_dists[k])
        lines.append(" ".join([f"topic{k}", *body]))
    return lines
