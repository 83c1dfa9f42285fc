import json
import subprocess
import sys

import numpy as np
import pytest

from genmod.cli import main
from genmod.data import Dataset
from genmod.harness import experiment as ex


SMALL = {
    "d": 2, "p": 2, "N": [20], "N_te": 40, "replication_count": 1, "master_seed": 2,
    "methods": ["omp", "irw-lasso"],
    "generator": {"kind": "synthetic", "z_star": [0, 1, 1.5, 0.2, 0], "spike_count": 1},
}


def write_config(tmp_path, body):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(body))
    return path


def test_gen_data_and_fit(tmp_path):
    data = tmp_path / "d.csv"
    assert main(["gen-data", "--d", "3", "--n", "30", "--seed", "4",
                 "--element-count", "16", "--out", str(data)]) == 0
    ds = Dataset.from_csv(data)
    assert ds.n == 30 and ds.d == 3 and ds.seed == 4
    for method in ("omp", "irw-lasso", "genmod"):
        out = tmp_path / f"{method}.csv"
        assert main(["fit", "--data", str(data), "--method", method, "--p", "2",
                     "--out", str(out)]) == 0
        table = np.loadtxt(out, delimiter=",", skiprows=1)
        assert table.shape == (10, 2)
        diag = json.loads((tmp_path / f"{method}.csv.json").read_text())
        assert diag["method"] == method and diag["P"] == 10


def test_synthetic_gen_data(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["gen-data", "--generator", "synthetic", "--d", "2", "--p", "2", "--n", "15",
                 "--out", str(out)]) == 0
    assert Dataset.from_csv(out).n == 15


def test_benchmark_success_and_config_error(tmp_path):
    out = tmp_path / "bench"
    assert main(["benchmark", "--config", str(write_config(tmp_path, SMALL)), "--out", str(out),
                 "--svg"]) == 0
    assert (out / "results.csv").exists() and (out / "errors.svg").exists()
    bad = dict(SMALL, unexpected=True)
    assert main(["benchmark", "--config", str(write_config(tmp_path, bad)),
                 "--out", str(out)]) == 2


def test_benchmark_partial_failure_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise ArithmeticError("forced")

    monkeypatch.setattr(ex, "omp_cv", boom)
    assert main(["benchmark", "--config", str(write_config(tmp_path, SMALL)),
                 "--out", str(tmp_path / "b")]) == 3
    rows = (tmp_path / "b" / "results.csv").read_text().splitlines()
    assert any("failed:ArithmeticError" in r for r in rows)


def test_jl_experiment(tmp_path):
    out = tmp_path / "jl.csv"
    assert main(["jl-experiment", "--d", "2", "--p", "2", "--N", "10", "20",
                 "--trials", "100", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3
    assert main(["jl-experiment", "--trials", "10", "--out", str(out)]) == 2


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "genmod", "--help"], capture_output=True, text=True)
    assert done.returncode == 0
    for cmd in ("gen-data", "fit", "benchmark", "jl-experiment"):
        assert cmd in done.stdout
