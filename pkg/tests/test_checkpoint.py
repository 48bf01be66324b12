import numpy as np
import pytest

from fsmn import checkpoint, data, network, training


def trained_fixture(dtype=np.float32, with_state=True):
    lines = data.synthetic_topic_lines(40, seed=14)
    vocab = data.build_vocab(lines, max_size=60)
    spec = network.parse_arch(
        "[2*6]-8(M)-8-V", vocab_size=vocab.size,
        memory={"kind": "vector", "lookback": 3, "lookahead": 1})
    model = network.build_model(spec, dtype, seed=2, tap_jitter=0.2)
    state = None
    if with_state:
        state = training.TrainState(lr=0.1, epoch=3, phase="halving", halvings=2,
                                    best_valid_ppl=41.5, prev_valid_ppl=42.0)
        state.velocity = {name: np.full_like(arr, 0.25)
                          for name, arr in model.named_params().items()}
    return model, vocab, state


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_roundtrip_restores_everything_bitwise(tmp_path, dtype):
    model, vocab, state = trained_fixture(dtype)
    path = tmp_path / "model.ckpt"
    checkpoint.save_checkpoint(path, model, vocab, state)

    back, vocab2, state2 = checkpoint.load_checkpoint(path)
    assert vocab2.tokens == vocab.tokens
    assert back.dtype == dtype
    assert back.spec == model.spec
    for name, arr in model.named_params().items():
        assert np.array_equal(back.named_params()[name], arr), name
    assert state2.lr == state.lr and state2.epoch == state.epoch
    assert state2.phase == state.phase and state2.halvings == state.halvings
    assert state2.best_valid_ppl == state.best_valid_ppl
    for name, v in state.velocity.items():
        assert np.array_equal(state2.velocity[name], v), name


def test_roundtrip_without_state(tmp_path):
    model, vocab, _ = trained_fixture(with_state=False)
    path = tmp_path / "bare.ckpt"
    checkpoint.save_checkpoint(path, model, vocab)
    _, _, state = checkpoint.load_checkpoint(path)
    assert state is None


def test_resave_is_byte_identical(tmp_path):
    model, vocab, state = trained_fixture()
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    checkpoint.save_checkpoint(p1, model, vocab, state)
    back, vocab2, state2 = checkpoint.load_checkpoint(p1)
    checkpoint.save_checkpoint(p2, back, vocab2, state2)
    assert p1.read_bytes() == p2.read_bytes()


def test_unknown_version_rejected_before_tensors(tmp_path):
    model, vocab, state = trained_fixture()
    path = tmp_path / "v.ckpt"
    checkpoint.save_checkpoint(path, model, vocab, state)
    blob = path.read_bytes()
    patched = blob.replace(b"fsmn-checkpoint 1", b"fsmn-checkpoint 9", 1)
    path.write_bytes(patched)
    with pytest.raises(checkpoint.CheckpointError, match="version"):
        checkpoint.load_checkpoint(path)


def test_wrong_magic_rejected(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"not a checkpoint at all\n")
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load_checkpoint(path)


def test_truncated_tensor_block_rejected(tmp_path):
    model, vocab, state = trained_fixture()
    path = tmp_path / "t.ckpt"
    checkpoint.save_checkpoint(path, model, vocab, state)
    blob = path.read_bytes()
    path.write_bytes(blob[:-20])
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load_checkpoint(path)


def test_tampered_manifest_shape_rejected(tmp_path):
    model, vocab, state = trained_fixture()
    path = tmp_path / "m.ckpt"
    checkpoint.save_checkpoint(path, model, vocab, state)
    text = path.read_bytes()
    assert b"L1.b float32 8" in text
    path.write_bytes(text.replace(b"L1.b float32 8", b"L1.b float32 9", 1))
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load_checkpoint(path)


def test_save_requires_an_arch_string(tmp_path):
    model, vocab, _ = trained_fixture(with_state=False)
    bare_spec = network.ModelSpec(model.spec.layers)  # no arch recorded
    clone = network.Model(bare_spec, model.params, model.dtype)
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.save_checkpoint(tmp_path / "x.ckpt", clone, vocab)
