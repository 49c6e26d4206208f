import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import REGION_WB, TOY, toy
from localdim.cli import build_parser, main
from localdim.data import write_sample_csv
from localdim.net import Architecture, Params, init_params, save_model

FIGURE_RANKS = {1: 1, 2: 2, 3: 3, 4: 2, 5: 3, 6: 2}


@pytest.fixture
def toy_sample(tmp_path):
    path = tmp_path / "x.csv"
    write_sample_csv(path, [[0.0, 1.0, 2.0]])
    return path


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out


@pytest.mark.parametrize("region", sorted(REGION_WB))
def test_rank_on_toy_regions(tmp_path, toy_sample, capsys, region):
    save_model(tmp_path / "m.json", TOY, toy(*REGION_WB[region]))
    code, out = run_cli(capsys, "rank", "--model", tmp_path / "m.json", "--sample", toy_sample)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["rank"] == FIGURE_RANKS[region]
    assert doc["max_rank"] == 3


def test_rank_dead_deep_net_and_outputs(tmp_path, capsys):
    arch = Architecture((2, 3, 3, 1))
    p = init_params(arch, seed=0)
    # every first-layer neuron is off on the positive quadrant
    p = Params((-np.abs(p.weights[0]), p.weights[1], p.weights[2]), (-np.ones(3), p.biases[1], p.biases[2]))
    save_model(tmp_path / "m.json", arch, p)
    write_sample_csv(tmp_path / "x.csv", np.abs(np.random.default_rng(0).standard_normal((2, 5))))
    code, out = run_cli(capsys, "rank", "--model", tmp_path / "m.json", "--sample", tmp_path / "x.csv",
                        "--out", tmp_path / "r.json", "--jacobian-csv", tmp_path / "j.csv",
                        "--envelope-eps", "0.01", "--envelope-samples", "5", "--tol-policy", "gap")
    assert code == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["rank"] == 1
    assert doc["envelope"]["dim_plus"] == 1
    assert (tmp_path / "j.csv").read_text().startswith("L1.w0.0,")


def test_shallow_analyze_dedupes(tmp_path, capsys, caplog):
    save_model(tmp_path / "m.json", TOY, toy(1, 1))
    write_sample_csv(tmp_path / "x.csv", [[2.0, 0.0, 1.0, 0.0]])
    code, out = run_cli(capsys, "shallow-analyze", "--model", tmp_path / "m.json", "--sample", tmp_path / "x.csv")
    assert code == 0
    doc = json.loads(out.out)
    assert doc["closed_form_rank"] == doc["numeric_rank"] == 2
    assert doc["duplicates_dropped"] == 1 and doc["bounds_hold"]
    assert "duplicate" in caplog.text


def test_library_errors_exit_2(tmp_path, capsys):
    save_model(tmp_path / "m.json", TOY, toy(1, 1))
    write_sample_csv(tmp_path / "x.csv", [[0.0, 1.0], [2.0, 3.0]])
    code, out = run_cli(capsys, "rank", "--model", tmp_path / "m.json", "--sample", tmp_path / "x.csv")
    assert code == 2
    assert "ConfigurationError" in out.err
    code, out = run_cli(capsys, "rank", "--model", tmp_path / "missing.json", "--sample", tmp_path / "x.csv")
    assert code == 2
    code, out = run_cli(capsys, "shallow-analyze", "--model", tmp_path / "m.json", "--sample", tmp_path / "x.csv")
    assert code == 2


@pytest.mark.parametrize("command", ["rank", "shallow-analyze", "toy-table", "saddle", "cpl", "width-sweep",
                                     "epoch-sweep"])
def test_help_documents_outputs(command, capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args([command, "--help"])
    text = capsys.readouterr().out
    assert "output" in text or "files in --out" in text
    for flag in ("--seed", "--out", "--jobs", "--tol-policy", "--sub-batch", "--no-plots"):
        assert flag in text


def test_toy_table_command(tmp_path, capsys):
    code, out = run_cli(capsys, "toy-table", "--runs", 50, "--iters", 20, "--out", tmp_path, "--no-plots")
    assert code == 0
    doc = json.loads(out.out)
    assert set(doc) == {"init", "final", "from_U1", "from_U2", "from_U3", "from_U4", "from_U5", "from_U6"}
    assert (tmp_path / "toy_table.csv").exists()


def test_saddle_command(tmp_path, capsys):
    code, out = run_cli(capsys, "saddle", "--seed", 26, "--n-seeds", 1, "--iters", 300, "--out", tmp_path,
                        "--no-plots")
    assert code == 0
    assert json.loads(out.out)["qualifying_seeds"] == [26]


def test_cpl_command(tmp_path, capsys):
    code, out = run_cli(capsys, "cpl", "--runs", 2, "--max-steps", 500, "--grid", 200, "--out", tmp_path,
                        "--no-plots")
    assert code == 0
    assert set(json.loads(out.out)) == {"success_rate", "loss_clusters", "max_local_dim", "max_seen_regions"}


def test_sweep_commands(tmp_path, capsys):
    code, out = run_cli(capsys, "width-sweep", "--widths", 2, 3, "--epochs", 2, "--n-train", 30, "--n-test", 20,
                        "--out", tmp_path / "w", "--no-plots")
    assert code == 0 and len(json.loads(out.out)) == 2
    code, out = run_cli(capsys, "epoch-sweep", "--width", 2, "--n-seeds", 2, "--record-epochs", 2, 1,
                        "--n-train", 30, "--n-test", 20, "--out", tmp_path / "e", "--no-plots")
    assert code == 0 and json.loads(out.out)["seeds"] == 2


def test_console_entry_point(tmp_path, toy_sample):
    save_model(tmp_path / "m.json", TOY, toy(1, 1))
    proc = subprocess.run([sys.executable, "-m", "localdim.cli", "rank", "--model", str(tmp_path / "m.json"),
                           "--sample", str(toy_sample)], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["rank"] == 2
