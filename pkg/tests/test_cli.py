"""Command-line surface: exit codes, file outputs, determinism."""

import json
from pathlib import Path

import pytest

from slukit.cli import (EXIT_CHECKPOINT, EXIT_CONFIG, EXIT_DATA, EXIT_OK,
                        load_config, main, validate_config)
from slukit.errors import ConfigError

TINY_CONFIG = {
    "n_samples": 90,
    "epochs": 2,
    "patience": 2,
    "d_emb": 6, "d_r": 8, "d_a": 6, "d_i": 6, "d_int": 3, "d_slot": 3, "h_s": 8,
}


def _write_config(tmp_path, extra=None) -> str:
    cfg = dict(TINY_CONFIG)
    if extra:
        cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def _dir_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


# ---------------------------------------------------------------------------
# config handling


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        validate_config({"nsamples": 10})


def test_type_checks():
    with pytest.raises(ConfigError):
        validate_config({"n_samples": "many"})
    with pytest.raises(ConfigError):
        validate_config({"use_profile": 1})
    with pytest.raises(ConfigError):
        validate_config({"fusion_mode": "magic"})
    assert validate_config({"learning_rate": 1})["learning_rate"] == 1.0


def test_defaults_complete():
    cfg = load_config(None)
    assert cfg["n_samples"] == 3000
    assert cfg["mention_ratio"] == pytest.approx(2 / 3)
    assert cfg["dropout_rate"] == 0.4
    assert cfg["l2_lambda"] == 1e-6


def test_seed_override():
    cfg = load_config(None, seed=42)
    assert cfg["seed"] == 42 and cfg["train_seed"] == 42


def test_unknown_config_key_exits_with_config_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"not_a_key": 1}', encoding="utf-8")
    code = main(["generate", str(path), "--out", str(tmp_path / "d")])
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# generate


def test_generate_is_reproducible_and_complete(tmp_path):
    cfg = _write_config(tmp_path)
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    assert main(["generate", cfg, "--out", str(out1)]) == EXIT_OK
    assert main(["generate", cfg, "--out", str(out2)]) == EXIT_OK
    assert _dir_bytes(out1) == _dir_bytes(out2)
    for name in ("train.jsonl", "valid.jsonl", "test.jsonl", "schema.json",
                 "stats.json", "stats.txt"):
        assert (out1 / name).exists()


def test_generate_stats_counts(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "data"
    assert main(["generate", cfg, "--out", str(out)]) == EXIT_OK
    stats = json.loads((out / "stats.json").read_text())
    assert sum(stats["per_intent"].values()) == 90
    assert stats["per_case"]["mention"] == 60
    assert stats["per_case"]["description"] == 30  # 2:1 mention:description


# ---------------------------------------------------------------------------
# train / eval


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = _write_config(root)
    data = root / "data"
    run = root / "run"
    assert main(["generate", cfg, "--out", str(data)]) == EXIT_OK
    assert main(["train", cfg, "--data", str(data), "--out", str(run)]) == EXIT_OK
    return root, cfg, data, run


def test_train_outputs(tiny_run):
    _, _, _, run = tiny_run
    for name in ("config.json", "train_log.txt", "best.ckpt", "final.ckpt",
                 "report.json", "report.txt"):
        assert (run / name).exists()


def test_eval_roundtrip(tiny_run, tmp_path):
    _, _, data, run = tiny_run
    out = tmp_path / "eval"
    code = main(["eval", "--checkpoint", str(run / "best.ckpt"),
                 "--data", str(data), "--split", "valid", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert 0.0 <= report["overall_accuracy"] <= report["intent_accuracy"] <= 1.0


def test_eval_flag_override_runs(tiny_run, capsys):
    _, _, data, run = tiny_run
    code = main(["eval", "--checkpoint", str(run / "best.ckpt"),
                 "--data", str(data), "--no-use-profile"])
    assert code == EXIT_OK
    assert "Overall" in capsys.readouterr().out


def test_eval_corrupted_checkpoint_exits_without_report(tiny_run, tmp_path, capsys):
    _, _, data, _ = tiny_run
    bad = tmp_path / "bad.ckpt"
    bad.write_text("{broken", encoding="utf-8")
    out = tmp_path / "report-dir"
    code = main(["eval", "--checkpoint", str(bad), "--data", str(data),
                 "--out", str(out)])
    assert code == EXIT_CHECKPOINT
    assert not out.exists()  # no partial report
    assert "checkpoint error" in capsys.readouterr().err


def test_eval_missing_data_is_data_error(tiny_run, tmp_path):
    _, _, _, run = tiny_run
    code = main(["eval", "--checkpoint", str(run / "best.ckpt"),
                 "--data", str(tmp_path / "nope")])
    assert code == EXIT_DATA


def test_config_both_positional_and_flag_rejected(tmp_path):
    cfg = _write_config(tmp_path)
    code = main(["generate", cfg, "--config", cfg, "--out", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


# ---------------------------------------------------------------------------
# gradcheck and ablate (reduced settings for test speed)


GRADCHECK_TINY = {
    "gradcheck_batch": 2,
    "gradcheck_d_emb": 4, "gradcheck_d_r": 6, "gradcheck_d_a": 4,
    "gradcheck_d_i": 4, "gradcheck_d_int": 2, "gradcheck_d_slot": 2,
    "gradcheck_h_s": 5,
}


def test_gradcheck_exits_zero(tmp_path, capsys):
    cfg = _write_config(tmp_path, GRADCHECK_TINY)
    assert main(["gradcheck", cfg]) == EXIT_OK
    out = capsys.readouterr().out
    assert "overall max_rel_err" in out


def test_train_with_gradcheck_flag(tmp_path):
    cfg = _write_config(tmp_path, {**GRADCHECK_TINY, "n_samples": 60, "epochs": 1,
                                   "patience": 1})
    data = tmp_path / "data"
    run = tmp_path / "run"
    assert main(["generate", cfg, "--out", str(data)]) == EXIT_OK
    assert main(["train", cfg, "--data", str(data), "--out", str(run),
                 "--gradcheck"]) == EXIT_OK
    assert (run / "best.ckpt").exists()


def test_ablate_writes_grid(tmp_path):
    cfg = _write_config(tmp_path, {"n_samples": 60, "epochs": 1, "patience": 1})
    data = tmp_path / "data"
    out = tmp_path / "ablate"
    assert main(["generate", cfg, "--out", str(data)]) == EXIT_OK
    assert main(["ablate", cfg, "--data", str(data), "--out", str(out)]) == EXIT_OK
    table = json.loads((out / "ablation.json").read_text())
    names = [cell["name"] for cell in table["cells"]]
    assert names == ["full", "no_sentence_adapter", "no_word_adapter",
                     "no_profile", "concat", "mlp"]
    assert (out / "ablation.txt").exists()
    assert (out / "cells" / "no_profile" / "best.ckpt").exists()
    # identical invocations must produce identical directories (no wall times)
    assert all("train_seconds" not in cell for cell in table["cells"])
    again = tmp_path / "ablate2"
    assert main(["ablate", cfg, "--data", str(data), "--out", str(again)]) == EXIT_OK
    assert _dir_bytes(out) == _dir_bytes(again)


def test_help_documents_keys_and_exit_codes(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    assert "n_samples" in out and "dropout_rate" in out
