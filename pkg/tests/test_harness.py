import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from genmod.data import Dataset
from genmod.errors import ConfigurationError, DegenerateInputError
from genmod.harness import experiment as ex
from genmod.harness.config import ExperimentConfig, SolverSettings, SyntheticGenerator
from genmod.harness.jl import jl_concentration_experiment, write_jl_csv
from genmod.harness.metrics import (
    coefficient_error,
    improvement_percent,
    reconstruction_error,
    split_dataset,
    split_sizes,
)
from genmod.harness.svg import error_plot
from genmod.harness.synthetic import SpikeSpec, planted_coefficients, synthetic_planted_dataset
from genmod.model import gen_eval
from genmod.pce import assemble_matrix, build_basis
from genmod.solvers import least_squares


def small_config(**changes):
    base = dict(
        d=2, p=2, N=(20,), N_te=60, replication_count=2, master_seed=11,
        generator=SyntheticGenerator(z_star=(0.0, 1.0, 1.5, 0.2, 0.0), spike_count=1),
        solver=SolverSettings(max_adam_iter=3000, max_outer=3),
    )
    base.update(changes)
    return ExperimentConfig(**base)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# configuration

def test_config_round_trip_and_unknown_keys(tmp_path):
    cfg = small_config()
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    with pytest.raises(ConfigurationError, match="unknown keys in config"):
        ExperimentConfig.from_dict({"d": 2, "p": 2, "N": [20], "colour": 1})
    with pytest.raises(ConfigurationError, match="generator"):
        ExperimentConfig.from_dict({"d": 2, "p": 2, "N": [20], "generator": {"sigmaa": 1}})
    with pytest.raises(ConfigurationError, match="solver"):
        ExperimentConfig.from_dict({"d": 2, "p": 2, "N": [20], "solver": {"rate": 1}})
    with pytest.raises(ConfigurationError, match="missing"):
        ExperimentConfig.from_dict({"d": 2, "p": 2})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"d": 2, "p": 2, "N": [20], "methods": ["lars"]})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(tmp_path / "absent.json")


@pytest.mark.parametrize("name", ["example1", "example1_sweep", "planted"])
def test_shipped_configs_load(name):
    from pathlib import Path

    cfg = ExperimentConfig.load(Path(__file__).parents[1] / "configs" / f"{name}.json")
    assert cfg.replication_count >= 1


def test_elliptic_defaults_match_desk_scale():
    cfg = ExperimentConfig.from_dict({"d": 14, "p": 3, "N": 40})
    assert cfg.N == (40,) and cfg.N_te == 1000 and cfg.N_ls == 5000
    assert cfg.replication_count == 10 and cfg.generator.L == 0.2


# metrics and splitting

def test_split_examples():
    assert split_sizes(40) == (32, 8)
    ds = Dataset(np.arange(40.0).reshape(40, 1) / 40, np.arange(40.0))
    op, va = split_dataset(ds, 0.2, 3)
    assert (op.n, va.n) == (32, 8)
    np.testing.assert_array_equal(np.sort(np.concatenate([op.u, va.u])), ds.u)
    op2, _ = split_dataset(ds, 0.2, 3)
    np.testing.assert_array_equal(op.u, op2.u)
    with pytest.raises(ConfigurationError):
        split_dataset(ds, 0.0, 3)
    with pytest.raises(ConfigurationError):
        split_sizes(4)


@pytest.mark.parametrize("n", range(5, 60))
def test_split_parts_non_empty(n):
    n_op, n_va = split_sizes(n)
    assert n_op >= 1 and n_va >= 1 and n_op + n_va == n


def test_metric_examples(rng):
    c = rng.normal(size=7)
    assert coefficient_error(c, c) == 0
    assert coefficient_error(np.zeros(7), c) == pytest.approx(1.0)
    assert coefficient_error(2 * c, c) == pytest.approx(1.0)
    with pytest.raises(DegenerateInputError):
        coefficient_error(c, np.zeros(7))
    psi = rng.normal(size=(7, 7))
    u = rng.normal(size=7)
    assert reconstruction_error(np.linalg.solve(psi, u), psi, u) < 1e-12
    assert reconstruction_error(np.zeros(7), psi, u) == pytest.approx(1.0)
    assert reconstruction_error(c, psi, u) == pytest.approx(
        np.sqrt(np.sum((psi @ c - u) ** 2) / np.sum(u**2)), rel=1e-13)
    assert improvement_percent(0.3, 0.3) == 0
    assert improvement_percent(0.3, 0.0) == 100
    assert improvement_percent(0.02, 0.01) == pytest.approx(50.0)
    with pytest.raises(DegenerateInputError):
        improvement_percent(0.0, 0.1)


# synthetic generator

def test_planted_dataset_examples():
    z = np.array([0.0, 1.0, 2.0, 3.0, 0.5, 0.0, 1.0])
    ones = np.ones(10)
    ds, c = synthetic_planted_dataset(3, 2, z, ones, SpikeSpec(count=0), 40, 0.0, 5)
    np.testing.assert_allclose(c, gen_eval(z, build_basis(3, 2)), rtol=1e-15)
    np.testing.assert_allclose(least_squares(assemble_matrix(build_basis(3, 2), ds.y), ds.u), c,
                               atol=1e-10)
    ds2, c2 = synthetic_planted_dataset(3, 2, z, ones, SpikeSpec(), 40, 0.01, 5)
    ds3, c3 = synthetic_planted_dataset(3, 2, z, ones, SpikeSpec(), 40, 0.01, 5)
    np.testing.assert_array_equal(ds2.u, ds3.u)
    np.testing.assert_array_equal(c2, c3)
    assert np.count_nonzero(c2 - c) == 5


def test_relative_spikes_scale_with_model(rng):
    z = np.array([0.0, 2.0, 2.0, 0.0, 0.0])
    g = gen_eval(z, build_basis(2, 3))
    c = planted_coefficients(2, 3, z, np.ones(10), SpikeSpec(count=10), rng)
    ratio = np.abs(c - g) / g
    assert np.all((ratio >= 1 - 1e-12) & (ratio <= 3 + 1e-12))
    absolute = planted_coefficients(2, 3, z, np.ones(10), SpikeSpec(3, 0.5, 0.5, False), rng)
    np.testing.assert_allclose(np.sort(np.abs(absolute - g))[-3:], 0.5)


# replications

@pytest.fixture(scope="module")
def benchmark_outputs(tmp_path_factory):
    cfg = small_config(N=(20, 30))
    out = tmp_path_factory.mktemp("bench")
    return cfg, out, ex.run_benchmark(cfg, out, workers=1, svg=True)


def test_methods_share_training_matrix():
    rec = ex.run_replication(small_config(), 0)
    hashes = {o.matrix_hash for o in rec.outcomes}
    assert len(hashes) == 1 and "" not in hashes
    assert [o.method for o in rec.outcomes] == list(small_config().methods)
    assert all(o.status == "ok" and o.eps_u >= 0 and o.eps_c >= 0 for o in rec.outcomes)


def test_replication_reproducible():
    a = ex.run_replication(small_config(), 1)
    b = ex.run_replication(small_config(), 1)
    for x, y in zip(a.outcomes, b.outcomes):
        np.testing.assert_array_equal(x.coefficients, y.coefficients)
        assert x.eps_u == y.eps_u
    assert a.train_seed == b.train_seed and a.test_seed == b.test_seed
    c = ex.run_replication(small_config(), 2)
    assert c.train_seed != a.train_seed


def test_method_failure_is_isolated(monkeypatch):
    def boom(*args, **kwargs):
        raise FloatingPointError("synthetic failure")

    monkeypatch.setattr(ex, "omp_cv", boom)
    rec = ex.run_replication(small_config(methods=("omp", "irw-lasso")), 0)
    assert rec.outcomes[0].status == "failed:FloatingPointError"
    assert rec.outcomes[1].status == "ok"


def test_benchmark_files_and_summary(benchmark_outputs):
    cfg, out, result = benchmark_outputs
    rows = read_rows(out / "results.csv")
    with open(out / "results.csv") as fh:
        assert fh.readline().strip() == ",".join(ex.CSV_COLUMNS)
    assert len(rows) == 2 * 2 * 4
    summary = json.loads((out / "summary.json").read_text())
    assert {(r["N"], r["method"]) for r in summary["rows"]} == {
        (n, m) for n in cfg.N for m in cfg.methods}
    # independent recomputation of the medians from the CSV
    for row in summary["rows"]:
        vals = [float(r["eps_u"]) for r in rows
                if int(r["N"]) == row["N"] and r["method"] == row["method"] and r["status"] == "ok"]
        assert row["eps_u"]["median"] == pytest.approx(float(np.median(vals)), rel=1e-15)
        assert row["eps_u"]["min"] == min(vals) and row["eps_u"]["max"] == max(vals)
    assert result.failures == 0 and summary["failures"] == 0
    ET.fromstring((out / "errors.svg").read_text())


def test_metrics_recomputable_from_stored_coefficients(benchmark_outputs):
    cfg, out, _ = benchmark_outputs
    coefs = np.load(out / "coefficients.npz")
    ctx = ex.ExperimentContext(cfg)
    for r in read_rows(out / "results.csv"):
        rep = int(r["replication"])
        test = ctx.sample(cfg.N_te, ex.child_seed(cfg.master_seed, ex._TEST, rep))
        c = coefs[f"N{r['N']}_rep{rep}_{r['method']}"]
        psi = assemble_matrix(ctx.basis, test.y)
        assert float(r["eps_u"]) == reconstruction_error(c, psi, test.u)
        assert float(r["eps_c"]) == coefficient_error(c, ctx.reference)


def test_single_replication_summary_is_the_record():
    cfg = small_config(replication_count=1, methods=("omp",))
    res = ex.run_benchmark(cfg)
    row = res.summary[0]
    eps = res.records[0].outcomes[0].eps_u
    assert row["eps_u"] == {"min": eps, "median": eps, "max": eps}


def test_parallel_run_matches_serial(benchmark_outputs, tmp_path):
    cfg, out, _ = benchmark_outputs
    ex.run_benchmark(cfg, tmp_path, workers=2)

    def strip(rows):
        return [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]

    assert strip(read_rows(tmp_path / "results.csv")) == strip(read_rows(out / "results.csv"))
    a, b = np.load(out / "coefficients.npz"), np.load(tmp_path / "coefficients.npz")
    assert sorted(a.files) == sorted(b.files)
    for k in a.files:
        np.testing.assert_array_equal(a[k], b[k])


def test_elliptic_context_reference():
    cfg = ExperimentConfig(d=2, p=2, N=(20,), N_te=30, N_ls=200, methods=("omp",),
                           replication_count=1)
    ctx = ex.ExperimentContext(cfg)
    assert ctx.reference.shape == (6,)
    # the constant coefficient is the mean response, close to the deterministic 1.25
    assert ctx.reference[0] == pytest.approx(1.25, rel=0.1)
    rec = ex.run_replication(cfg, 0, context=ctx)
    assert rec.outcomes[0].status == "ok"


# norm concentration

def test_jl_table(tmp_path):
    rows = jl_concentration_experiment(3, 2, [20, 80], trial_count=300, seed=1)
    assert [r.N for r in rows] == [20, 80]
    for r in rows:
        assert r.exceedance[0.0] == 1.0
        assert abs(r.mean - 1) < 3 * r.stderr + 1e-12
        vals = [r.exceedance[e] for e in sorted(r.exceedance)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
    again = jl_concentration_experiment(3, 2, [20, 80], trial_count=300, seed=1)
    assert [r.mean for r in again] == [r.mean for r in rows]
    write_jl_csv(rows, tmp_path / "jl.csv")
    table = read_rows(tmp_path / "jl.csv")
    assert len(table) == 2 and float(table[1]["mean"]) == rows[1].mean
    with pytest.raises(ConfigurationError):
        jl_concentration_experiment(3, 2, [20], trial_count=50)


def test_svg_handles_empty_and_full_input(benchmark_outputs):
    assert ET.fromstring(error_plot([])).tag.endswith("svg")
    _, _, result = benchmark_outputs
    doc = error_plot(result.records, metric="eps_c")
    root = ET.fromstring(doc)
    circles = [el for el in root.iter() if el.tag.endswith("circle")]
    assert len(circles) == 16
