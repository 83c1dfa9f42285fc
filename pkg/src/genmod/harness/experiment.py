"""Replicated comparison of GenMod against the sparse baselines."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..data import Dataset
from ..elliptic import generate_dataset, kl_eigenpairs
from ..errors import ConfigurationError
from ..fit import GenModConfig, assemble_coefficients, genmod_fit
from ..pce import assemble_matrix, build_basis
from ..solvers import irw_lasso, least_squares, omp_cv
from .config import ExperimentConfig, SyntheticGenerator
from .metrics import coefficient_error, reconstruction_error, split_dataset
from .synthetic import SpikeSpec, planted_coefficients, random_latent

CSV_COLUMNS = ["replication", "method", "N", "eps_c", "eps_u", "wall_ms", "outer_iters",
               "sign_flips", "status"]

# stream tags for child seeds
_TRAIN, _TEST, _SPLIT, _REFERENCE = range(4)


def child_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Independent, individually re-creatable stream for ``keys``."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in keys))


def seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def matrix_hash(psi: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(psi).tobytes()).hexdigest()[:16]


@dataclass
class MethodOutcome:
    method: str
    eps_c: float = float("nan")
    eps_u: float = float("nan")
    wall_ms: float = 0.0
    outer_iters: int | None = None
    sign_flips: int | None = None
    status: str = "ok"
    coefficients: np.ndarray | None = field(default=None, repr=False)
    matrix_hash: str = ""


@dataclass
class ReplicationRecord:
    replication: int
    N: int
    outcomes: list[MethodOutcome]
    train_seed: int
    test_seed: int


class ExperimentContext:
    """Everything shared by the replications of one configuration."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.basis = build_basis(config.d, config.p)
        gen = config.generator
        self.kl = None
        if isinstance(gen, SyntheticGenerator):
            self.reference = self._planted(gen)
        else:
            self.kl = kl_eigenpairs(gen.L, config.d, gen.n_quad, gen.a_bar, gen.sigma)
            self.kl.require_positive()
            self.reference = None
            if config.N_ls > 0:
                ds = self.sample(config.N_ls, child_seed(config.master_seed, _REFERENCE))
                self.reference = least_squares(assemble_matrix(self.basis, ds.y), ds.u)

    def _planted(self, gen: SyntheticGenerator) -> np.ndarray:
        rng = np.random.default_rng(gen.coefficient_seed)
        d = self.config.d
        if gen.z_star is not None:
            z = np.asarray(gen.z_star, dtype=float)
        else:
            z = random_latent(d, rng, gen.decay_range, gen.algebraic_range)
        if gen.signs == "positive":
            zeta = np.ones(self.basis.size)
        else:
            zeta = rng.choice([-1.0, 1.0], self.basis.size)
        spikes = SpikeSpec(gen.spike_count, gen.spike_low, gen.spike_high, gen.spike_relative)
        return planted_coefficients(d, self.config.p, z, zeta, spikes, rng)

    def sample(self, n: int, seq: np.random.SeedSequence) -> Dataset:
        gen = self.config.generator
        if self.kl is not None:
            return generate_dataset(self.kl, gen.element_count, n, seq)
        y_rng, noise_rng = (np.random.default_rng(s) for s in seq.spawn(2))
        y = y_rng.uniform(-1.0, 1.0, size=(n, self.config.d))
        u = assemble_matrix(self.basis, y) @ self.reference
        if gen.noise_level:
            u = u + gen.noise_level * noise_rng.standard_normal(n)
        return Dataset(y, u, noise_level=gen.noise_level, metadata={"generator": "synthetic"})


def _genmod_config(config: ExperimentConfig, sparse: bool, fold_seed: int) -> GenModConfig:
    s = config.solver
    return GenModConfig(
        learning_rate=s.learning_rate, max_outer=s.max_outer, max_adam_iter=s.max_adam_iter,
        delta_tol=s.delta_tol, weight_eps=s.weight_eps, sparse=sparse, folds=s.folds,
        fold_seed=fold_seed, lasso_grid_size=s.lasso_grid_size,
        lasso_grid_ratio=s.lasso_grid_ratio,
    )


def _run_method(method, ctx, psi_op, u_op, psi_va, u_va, fold_seed):
    """Returns (coefficients, outer_iters, sign_flips, hash of the training matrix)."""
    s = ctx.config.solver
    psi_all = np.vstack([psi_op, psi_va])
    u_all = np.concatenate([u_op, u_va])
    digest = matrix_hash(psi_all)
    if method in ("genmod", "genmod-nosparse"):
        cfg = _genmod_config(ctx.config, method == "genmod", fold_seed)
        report = genmod_fit(psi_op, u_op, psi_va, u_va, ctx.basis, cfg)
        coef = assemble_coefficients(report.state, ctx.basis)
        return coef, report.outer_iterations, report.sign_flip_count, digest
    if method == "omp":
        res = omp_cv(psi_all, u_all, folds=s.folds, fold_seed=fold_seed, max_atoms=s.omp_max_atoms)
        return res.coefficients, None, None, digest
    if method == "irw-lasso":
        res = irw_lasso(psi_all, u_all, s.irw_tau0, s.irw_tau_max, s.irw_max_iter,
                        folds=s.folds, fold_seed=fold_seed)
        return res.coefficients, None, None, digest
    raise ConfigurationError(f"unknown method {method!r}")


def run_replication(config: ExperimentConfig, replication_index: int, n: int | None = None,
                    context: ExperimentContext | None = None) -> ReplicationRecord:
    """One replication at sample count ``n`` (default: the first configured N).

    Training, splitting and test data come from child seeds of
    ``(master_seed, N, replication_index)``; the test set depends only on the
    replication index, so it is shared across sample counts.
    """
    ctx = context or ExperimentContext(config)
    n = int(n if n is not None else config.N[0])
    train_seq = child_seed(config.master_seed, _TRAIN, n, replication_index)
    test_seq = child_seed(config.master_seed, _TEST, replication_index)
    split_seq = child_seed(config.master_seed, _SPLIT, n, replication_index)
    train = ctx.sample(n, train_seq)
    test = ctx.sample(config.N_te, test_seq)
    op, va = split_dataset(train, config.va_fraction, split_seq)
    psi_op = assemble_matrix(ctx.basis, op.y)
    psi_va = assemble_matrix(ctx.basis, va.y)
    psi_te = assemble_matrix(ctx.basis, test.y)
    fold_seed = seed_int(split_seq) % (2**32)

    outcomes = []
    for method in config.methods:
        out = MethodOutcome(method)
        start = time.perf_counter()
        try:
            coef, outer, flips, digest = _run_method(
                method, ctx, psi_op.copy(), op.u.copy(), psi_va.copy(), va.u.copy(), fold_seed
            )
            out.coefficients = coef
            out.outer_iters, out.sign_flips, out.matrix_hash = outer, flips, digest
            out.eps_u = reconstruction_error(coef, psi_te, test.u)
            if ctx.reference is not None:
                out.eps_c = coefficient_error(coef, ctx.reference)
            if not (np.isfinite(out.eps_u) and (ctx.reference is None or np.isfinite(out.eps_c))):
                out.status = "failed:non-finite error"
        except Exception as exc:  # isolate failures per method
            out.status = f"failed:{type(exc).__name__}"
        out.wall_ms = (time.perf_counter() - start) * 1e3
        outcomes.append(out)
    return ReplicationRecord(replication_index, n, outcomes, seed_int(train_seq), seed_int(test_seq))


_WORKER_CONTEXT: dict = {}


def _worker(args):
    config, n, rep = args
    key = json.dumps(config.to_dict(), sort_keys=True)
    ctx = _WORKER_CONTEXT.get(key)
    if ctx is None:
        ctx = _WORKER_CONTEXT[key] = ExperimentContext(config)
    return run_replication(config, rep, n, ctx)


def summarize(records: list[ReplicationRecord]) -> list[dict]:
    """Min/median/max of each error per (N, method), with failure counts."""
    groups: dict = {}
    for rec in records:
        for out in rec.outcomes:
            groups.setdefault((rec.N, out.method), []).append(out)
    rows = []
    for (n, method), outs in sorted(groups.items()):
        ok = [o for o in outs if o.status == "ok"]
        row = {"N": n, "method": method, "replications": len(outs), "failures": len(outs) - len(ok)}
        for name in ("eps_u", "eps_c"):
            vals = np.array([getattr(o, name) for o in ok], dtype=float)
            vals = vals[np.isfinite(vals)]
            row[name] = (
                {"min": float(vals.min()), "median": float(np.median(vals)), "max": float(vals.max())}
                if vals.size else None
            )
        rows.append(row)
    return rows


@dataclass
class BenchmarkResult:
    records: list[ReplicationRecord]
    summary: list[dict]
    failures: int
    paths: dict


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if np.isnan(v) else repr(v)
    return str(v)


def write_results_csv(records: list[ReplicationRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            for o in rec.outcomes:
                writer.writerow([rec.replication, o.method, rec.N, _fmt(o.eps_c), _fmt(o.eps_u),
                                 f"{o.wall_ms:.1f}", _fmt(o.outer_iters), _fmt(o.sign_flips),
                                 o.status])


def run_benchmark(config: ExperimentConfig, out_dir=None, workers: int = 1,
                  svg: bool = False) -> BenchmarkResult:
    """All replications for every configured N; output is independent of ``workers``.

    Writes ``results.csv``, ``summary.json``, ``coefficients.npz`` and
    optionally ``errors.svg`` into ``out_dir`` when given.
    """
    jobs = [(config, n, rep) for n in config.N for rep in range(config.replication_count)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, jobs))
    else:
        ctx = ExperimentContext(config)
        records = [run_replication(config, rep, n, ctx) for _, n, rep in jobs]
    records.sort(key=lambda r: (r.N, r.replication))
    summary = summarize(records)
    failures = sum(o.status != "ok" for r in records for o in r.outcomes)
    paths = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths["results"] = out / "results.csv"
        write_results_csv(records, paths["results"])
        paths["summary"] = out / "summary.json"
        paths["summary"].write_text(json.dumps(
            {"config": config.to_dict(), "failures": failures, "rows": summary}, indent=2))
        arrays = {}
        for r in records:
            for o in r.outcomes:
                if o.coefficients is not None:
                    arrays[f"N{r.N}_rep{r.replication}_{o.method}"] = o.coefficients
        paths["coefficients"] = out / "coefficients.npz"
        np.savez_compressed(paths["coefficients"], **arrays)
        if svg:
            from .svg import error_plot

            paths["svg"] = out / "errors.svg"
            paths["svg"].write_text(error_plot(records))
    return BenchmarkResult(records, summary, failures, paths)


def with_overrides(config: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(config, **changes)
