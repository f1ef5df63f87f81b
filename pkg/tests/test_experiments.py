import os

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

import experiments.experiment_runner as experiment_runner
from data.results_tracker import RUN_FIELDS, read_training_log
from experiments.report import aggregate_runs, ordering_checks, regularization_checks
from main import cli

SMOKE = """model=lstm_net
scenario=cl1
dataset=synth
seeds=0
epochs=1
chunk_size=50
embedding_dim=4
hidden_size=4
hidden=8
batch_size=16
synth_tasks=2
synth_classes=2
synth_dim=4
synth_samples=20
fisher_samples=16
"""


@pytest.fixture
def smoke_config(tmp_path):
    path = tmp_path / "smoke.env"
    path.write_text(SMOKE)
    return str(path)


def _run(*args):
    return CliRunner().invoke(cli, list(args), catch_exceptions=False)


def test_smoke_run_writes_every_artifact(smoke_config, tmp_path):
    out = str(tmp_path / "out")
    result = _run("run", "--config", smoke_config, "--out", out)
    assert result.exit_code == 0

    cell = os.path.join(out, "lstm_net_cl1_synth", "seed_0")
    for name in ("config.env", "training_log.tsv", "metrics.csv", "checkpoint.npz", "run.csv"):
        assert os.path.isfile(os.path.join(cell, name))
    assert len(read_training_log(os.path.join(cell, "training_log.tsv"))) == 2
    assert len(pd.read_csv(os.path.join(cell, "metrics.csv"))) == 3

    summary = pd.read_csv(os.path.join(out, "summary.csv"))
    assert len(summary) == 1
    assert summary.loc[0, "n_runs"] == 1
    assert np.isnan(summary.loc[0, "avg_acc_std"])
    assert 0.0 <= summary.loc[0, "avg_acc"] <= 1.0


def test_runs_are_reproducible(smoke_config, tmp_path):
    outs = [str(tmp_path / name) for name in ("a", "b")]
    for out in outs:
        assert _run("run", "--config", smoke_config, "--out", out).exit_code == 0
    texts = [open(os.path.join(out, "summary.csv")).read() for out in outs]
    assert texts[0] == texts[1]


def test_grid_from_flags(smoke_config, tmp_path):
    out = str(tmp_path / "grid")
    result = _run("run", "--config", smoke_config, "--model", "lstm_net,hnet_iwr,lstm_net_grow", "--out", out)
    assert result.exit_code == 0
    summary = pd.read_csv(os.path.join(out, "summary.csv"))
    assert sorted(summary["model"]) == ["hnet_iwr", "lstm_net", "lstm_net_grow"]


def test_config_errors_exit_with_two(smoke_config, tmp_path):
    bad = tmp_path / "bad.env"
    bad.write_text(SMOKE + "betaa=0.1\n")
    assert _run("run", "--config", str(bad)).exit_code == 2
    missing = tmp_path / "mnist.env"
    missing.write_text(SMOKE.replace("dataset=synth", f"dataset=split_mnist\ndata_root={tmp_path}"))
    assert _run("run", "--config", str(missing)).exit_code == 2


def test_failed_cell_leaves_a_marker(smoke_config, tmp_path, monkeypatch):
    def explode(config, seed):
        raise RuntimeError("boom")

    monkeypatch.setattr(experiment_runner, "run_seed", explode)
    out = str(tmp_path / "failing")
    assert _run("run", "--config", smoke_config, "--out", out).exit_code == 1
    marker = os.path.join(out, "lstm_net_cl1_synth", "seed_0", experiment_runner.FAILED_MARKER)
    assert "boom" in open(marker).read()


def test_report_rebuilds_summary(smoke_config, tmp_path):
    out = str(tmp_path / "out")
    _run("run", "--config", smoke_config, "--out", out)
    os.remove(os.path.join(out, "summary.csv"))
    result = _run("report", "--in", out)
    assert result.exit_code == 0
    assert os.path.isfile(os.path.join(out, "summary.csv"))
    assert "lstm_net" in result.output


def test_beta_sweep(smoke_config, tmp_path):
    out = str(tmp_path / "sweep")
    result = _run("ablate", "--config", smoke_config, "--out", out, "--sweep", "beta", "--values", "0,0.5")
    assert result.exit_code == 0
    table = pd.read_csv(os.path.join(out, "beta_sweep.csv"))
    assert list(table["beta"]) == [0.0, 0.5]
    assert {"avg_during", "avg_forgetting"} <= set(table.columns)


# ---------- aggregation ----------

def _runs(model, scenario, accs):
    return [{**{k: 0.0 for k in RUN_FIELDS}, "model": model, "scenario": scenario, "dataset": "synth",
             "seed": seed, "avg_acc": acc} for seed, acc in enumerate(accs)]


def test_summary_mean_and_sample_std():
    summary = aggregate_runs(pd.DataFrame(_runs("hnet", "cl1", [0.8, 0.9, 1.0])))
    assert summary.loc[0, "n_runs"] == 3
    assert summary.loc[0, "avg_acc"] == pytest.approx(0.9, abs=1e-12)
    assert summary.loc[0, "avg_acc_std"] == pytest.approx(0.1, abs=1e-12)


def test_ordering_check_flags_cl3_above_cl1():
    rows = _runs("hnet", "cl1", [0.5, 0.5, 0.5]) + _runs("hnet", "cl3", [0.7, 0.7, 0.7])
    assert len(ordering_checks(aggregate_runs(pd.DataFrame(rows)))) == 1
    few = _runs("hnet", "cl1", [0.5, 0.5]) + _runs("hnet", "cl3", [0.7, 0.7])
    assert ordering_checks(aggregate_runs(pd.DataFrame(few))) == []


def _sweep_rows(forgetting_by_beta):
    return pd.DataFrame([{"beta": beta, "seed": seed, "avg_acc": 0.9, "avg_during": 0.95, "avg_forgetting": f}
                         for beta, values in forgetting_by_beta.items() for seed, f in enumerate(values)])


def test_regularization_check_passes_when_beta_reduces_forgetting():
    assert regularization_checks(_sweep_rows({0.0: [0.4, 0.5], 0.1: [0.05, 0.1]})) == []


def test_regularization_check_flags_useless_beta():
    assert len(regularization_checks(_sweep_rows({0.0: [0.1, 0.1], 0.01: [0.2, 0.3], 1.0: [0.1, 0.2]}))) == 1
    assert regularization_checks(_sweep_rows({0.1: [0.2, 0.3]})) == []
