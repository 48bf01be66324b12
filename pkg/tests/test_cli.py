import os

import numpy as np
import pytest

from fsmn import cli, data


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    lines = data.synthetic_topic_lines(300, seed=42)
    (root / "train.txt").write_text("\n".join(lines[:240]) + "\n")
    (root / "valid.txt").write_text("\n".join(lines[240:270]) + "\n")
    (root / "test.txt").write_text("\n".join(lines[270:]) + "\n")
    return root


TRAIN_ARGS = ["--arch", "[1*12]-16(M)-16-V", "--memory", "scalar",
              "--lookback", "3", "--vocab-size", "120", "--epochs", "2",
              "--batch-size", "24", "--lr", "0.2", "--threads", "1"]


@pytest.fixture(scope="module")
def trained_dir(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    rc = cli.main(["train", *TRAIN_ARGS,
                   "--train", str(corpus_dir / "train.txt"),
                   "--valid", str(corpus_dir / "valid.txt"),
                   "--test", str(corpus_dir / "test.txt"),
                   "--out", str(out)])
    assert rc == 0
    return out


# ----------------------------------------------------------- config files


def test_read_config_values_and_comments(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("lr = 0.3   # step size\n\n# full-line comment\nbatch-size=16\n")
    assert cli._read_config(p) == {"lr": "0.3", "batch_size": "16"}


def test_read_config_rejects_malformed_line(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("just some words\n")
    with pytest.raises(ValueError):
        cli._read_config(p)


def test_flags_override_config_file(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("lr = 0.3\nepochs = 9\n")
    parser = cli._build_parser()
    args = parser.parse_args(["train", "--config", str(p), "--lr", "0.7",
                              "--arch", "a", "--train", "t", "--valid", "v",
                              "--out", "o"])
    got = cli._resolve(args)
    assert got.lr == 0.7       # flag beats file
    assert got.epochs == 9     # file beats default
    assert got.momentum == 0.9  # default survives


def test_unknown_config_key_rejected(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("warp_speed = 9\n")
    parser = cli._build_parser()
    args = parser.parse_args(["bench", "--config", str(p)])
    with pytest.raises(ValueError):
        cli._resolve(args)


def test_missing_required_flag_reports_nonzero(capsys):
    rc = cli.main(["train", "--arch", "8-16-V"])
    assert rc == 1
    assert "required" in capsys.readouterr().err


# -------------------------------------------------------------- commands


def test_train_writes_expected_artifacts(trained_dir, capsys):
    names = sorted(os.listdir(trained_dir))
    assert "final.ckpt" in names and "history.csv" in names and "vocab.txt" in names
    assert "epoch-000.ckpt" in names and "epoch-001.ckpt" in names
    history = (trained_dir / "history.csv").read_text().strip().split("\n")
    assert history[0] == "epoch,lr,train_loss,valid_ppl"
    assert len(history) == 3


def test_train_bad_arch_exits_with_parse_error(corpus_dir, tmp_path, capsys):
    rc = cli.main(["train", "--arch", "8-oops-V",
                   "--train", str(corpus_dir / "train.txt"),
                   "--valid", str(corpus_dir / "valid.txt"),
                   "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "oops" in capsys.readouterr().err


def test_train_missing_file_exits_nonzero(tmp_path, capsys):
    rc = cli.main(["train", "--arch", "[1*8]-16-V",
                   "--train", str(tmp_path / "none.txt"),
                   "--valid", str(tmp_path / "none.txt"),
                   "--out", str(tmp_path / "y")])
    assert rc == 1
    assert "no such file" in capsys.readouterr().err


def test_eval_reproduces_training_test_score(trained_dir, corpus_dir, capsys):
    rc = cli.main(["eval", "--checkpoint", str(trained_dir / "final.ckpt"),
                   "--data", str(corpus_dir / "test.txt")])
    assert rc == 0
    printed = capsys.readouterr().out.strip()
    float(printed)  # exactly one parseable number, two decimals
    assert len(printed.split(".")[-1]) == 2


def test_eval_vocab_crosscheck_accepts_training_vocab(trained_dir, corpus_dir):
    rc = cli.main(["eval", "--checkpoint", str(trained_dir / "final.ckpt"),
                   "--data", str(corpus_dir / "test.txt"),
                   "--vocab", str(trained_dir / "vocab.txt")])
    assert rc == 0


def test_eval_vocab_mismatch_rejected(trained_dir, corpus_dir, tmp_path, capsys):
    wrong = data.build_vocab(["completely different words"], max_size=5)
    data.save_vocab(wrong, tmp_path / "wrong.txt")
    rc = cli.main(["eval", "--checkpoint", str(trained_dir / "final.ckpt"),
                   "--data", str(corpus_dir / "test.txt"),
                   "--vocab", str(tmp_path / "wrong.txt")])
    assert rc == 1
    assert "vocab" in capsys.readouterr().err.lower()


def test_dump_filters_offsets_ascending(trained_dir, capsys):
    rc = cli.main(["dump-filters", "--checkpoint", str(trained_dir / "final.ckpt")])
    assert rc == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "offset,value"
    offsets = [int(line.split(",")[0]) for line in out[1:]]
    assert offsets == list(range(-0, 4))  # lookahead 0, lookback 3


def test_dump_filters_identity_init_has_unit_current_tap(tmp_path, capsys):
    from fsmn import checkpoint, network
    vocab = data.build_vocab(["a b c"], max_size=10)
    spec = network.parse_arch("[1*4]-6(M)-V", vocab_size=vocab.size,
                              memory={"kind": "scalar", "lookback": 2,
                                      "lookahead": 1})
    model = network.build_model(spec, np.float64, seed=0)
    checkpoint.save_checkpoint(tmp_path / "i.ckpt", model, vocab)
    rc = cli.main(["dump-filters", "--checkpoint", str(tmp_path / "i.ckpt")])
    assert rc == 0
    rows = capsys.readouterr().out.strip().split("\n")[1:]
    table = {int(r.split(",")[0]): float(r.split(",")[1]) for r in rows}
    assert table == {-1: 0.0, 0: 1.0, 1: 0.0, 2: 0.0}


def test_dump_filters_vector_kind_gets_mean_column(tmp_path, capsys):
    from fsmn import checkpoint, network
    vocab = data.build_vocab(["a b c"], max_size=10)
    spec = network.parse_arch("[1*4]-6(M)-V", vocab_size=vocab.size,
                              memory={"kind": "vector", "lookback": 1,
                                      "lookahead": 0})
    model = network.build_model(spec, np.float64, seed=0)
    checkpoint.save_checkpoint(tmp_path / "v.ckpt", model, vocab)
    rc = cli.main(["dump-filters", "--checkpoint", str(tmp_path / "v.ckpt")])
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "offset," + ",".join(f"d{k}" for k in range(6)) + ",mean"
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[-1]) == 1.0


def test_dump_filters_attention_rejected(tmp_path, capsys):
    from fsmn import checkpoint, network
    vocab = data.build_vocab(["a b c"], max_size=10)
    spec = network.parse_arch("[1*4]-6(M)-V", vocab_size=vocab.size,
                              memory={"kind": "attention", "lookback": 2,
                                      "lookahead": 0, "att_dim": 3})
    model = network.build_model(spec, np.float64, seed=0)
    checkpoint.save_checkpoint(tmp_path / "a.ckpt", model, vocab)
    rc = cli.main(["dump-filters", "--checkpoint", str(tmp_path / "a.ckpt")])
    assert rc == 1
    assert "attention" in capsys.readouterr().err


def test_dump_filters_layer_without_memory_rejected(trained_dir, capsys):
    rc = cli.main(["dump-filters", "--checkpoint", str(trained_dir / "final.ckpt"),
                   "--layer", "0"])
    assert rc == 1


def test_gradcheck_sampled_run_passes(capsys):
    rc = cli.main(["gradcheck", "--sample", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "FAIL" not in out
    for tag in ("sfsmn-uni", "sfsmn-bi", "vfsmn-uni", "vfsmn-bi",
                "attention", "rnn-baseline"):
        assert tag in out


def test_bench_csv_reports_backends(capsys):
    rc = cli.main(["bench", "--dim", "12", "--frames", "16,32"])
    assert rc == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "variant,frames,seconds,max_abs_diff"
    variants = {line.split(",")[0] for line in out[1:]}
    assert "encode-naive" in variants and "epoch-recurrent" in variants
