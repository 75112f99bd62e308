from __future__ import annotations

import json

import pytest

from recall.cli import main
from recall.corpus import save_corpus
from recall.harness import SyntheticSpec, generate_synthetic, read_exported_csv


@pytest.fixture()
def corpus_csv(tmp_path):
    corpus = generate_synthetic(
        SyntheticSpec(n_docs=120, prevalence=0.1, vocab_size=80, signal=0.8, seed=2)
    )
    path = tmp_path / "corpus.csv"
    save_corpus(corpus, path)
    return path


def test_sim_writes_results(tmp_path, corpus_csv, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "batch_size": 5, "retrain_every": 5, "seed": 2,
        "stopping": {"rule": "none"},
    }))
    out = tmp_path / "out"
    assert main(["sim", "--corpus", str(corpus_csv), "--config", str(config),
                 "--out", str(out)]) == 0
    meta, rows = read_exported_csv(out / "result.csv")
    assert meta["true_positives"] == "12"
    payload = json.loads((out / "result.json").read_text())
    assert payload["metrics"]["final_recall"] == 1.0
    assert "cost at recall 0.95" in capsys.readouterr().out


def test_sim_with_error_model_and_recheck(tmp_path, corpus_csv):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "batch_size": 5, "retrain_every": 5, "seed": 2,
        "balancing": "aggressive_undersampling",
        "error_model": {"false_negative_rate": 0.3, "seed": 2},
        "recheck": {"method": "disagreement", "budget": 12},
    }))
    out = tmp_path / "out"
    assert main(["sim", "--corpus", str(corpus_csv), "--config", str(config),
                 "--out", str(out)]) == 0
    payload = json.loads((out / "result.json").read_text())
    assert payload["corrections"]["rechecked"] <= 12


def test_bench_prints_battery_summary(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "synthetic": {"n_docs": 120, "prevalence": 0.1, "vocab_size": 80, "signal": 0.8},
        "seeds": [1, 2],
        "config": {"batch_size": 5, "retrain_every": 5},
        "target": 0.95,
    }))
    out = tmp_path / "battery"
    assert main(["bench", "--spec", str(spec), "--out", str(out)]) == 0
    shown = capsys.readouterr().out
    assert "active: reached target in 2/2 seeds" in shown
    assert (out / "active_seed1.csv").exists()
    assert (out / "active_seed2.json").exists()


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        main([])
