"""Command-line entry point: ``genmod-pce {gen-data,fit,benchmark,jl-experiment}``.

Exit status is 0 on success, 2 on a configuration error and 3 when a
benchmark finished with failed method runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ConfigurationError
from .fit import GenModConfig, assemble_coefficients, genmod_fit
from .harness.config import METHODS, ExperimentConfig
from .harness.metrics import split_dataset

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3


def _gen_data(args) -> int:
    from .elliptic import generate_dataset, kl_eigenpairs

    if args.generator == "elliptic1d":
        kl = kl_eigenpairs(args.L, args.d, a_bar=args.a_bar, sigma=args.sigma)
        ds = generate_dataset(kl, args.element_count, args.n, args.seed)
    else:
        from .harness.synthetic import SpikeSpec, random_latent, synthetic_planted_dataset
        from .pce import basis_size

        rng = np.random.default_rng(args.seed)
        z = random_latent(args.d, rng)
        zeta = rng.choice([-1.0, 1.0], basis_size(args.d, args.p))
        ds, _ = synthetic_planted_dataset(args.d, args.p, z, zeta, SpikeSpec(), args.n,
                                          args.noise_level, args.seed)
    meta = ds.to_csv(args.out)
    print(f"wrote {ds.n} samples to {args.out} (metadata {meta})")
    return EXIT_OK


def _fit(args) -> int:
    from .pce import assemble_matrix, build_basis
    from .solvers import irw_lasso, omp_cv

    ds = Dataset.from_csv(args.data)
    basis = build_basis(ds.d, args.p)
    diag: dict = {"method": args.method, "N": ds.n, "d": ds.d, "p": args.p, "P": basis.size}
    start = time.perf_counter()
    if args.method in ("genmod", "genmod-nosparse"):
        op, va = split_dataset(ds, args.va_fraction, args.seed)
        cfg = GenModConfig(learning_rate=args.learning_rate, sparse=args.method == "genmod",
                           fold_seed=args.seed)
        report = genmod_fit(assemble_matrix(basis, op.y), op.u, assemble_matrix(basis, va.y),
                            va.u, basis, cfg)
        coef = assemble_coefficients(report.state, basis)
        diag.update(outer_iterations=report.outer_iterations,
                    validation_loss_trace=report.validation_loss_trace,
                    sign_flips=report.sign_flip_count, chosen_lambdas=report.chosen_lambdas,
                    latent=report.state.z.tolist())
    elif args.method == "omp":
        res = omp_cv(assemble_matrix(basis, ds.y), ds.u, fold_seed=args.seed)
        coef = res.coefficients
        diag.update(support=[int(i) for i in res.support])
    else:
        res = irw_lasso(assemble_matrix(basis, ds.y), ds.u, fold_seed=args.seed)
        coef = res.coefficients
        diag.update(converged=res.converged, tau=res.tau, iterations=res.iterations)
    diag["wall_ms"] = (time.perf_counter() - start) * 1e3
    out = Path(args.out)
    np.savetxt(out, np.column_stack([np.arange(basis.size), coef]), fmt=["%d", "%.17g"],
               delimiter=",", header="index,coefficient", comments="")
    diag_path = Path(args.diagnostics) if args.diagnostics else out.with_name(out.name + ".json")
    diag_path.write_text(json.dumps(diag, indent=2))
    print(f"wrote {basis.size} coefficients to {out}")
    return EXIT_OK


def _benchmark(args) -> int:
    from .harness.experiment import run_benchmark

    config = ExperimentConfig.load(args.config)
    result = run_benchmark(config, args.out, workers=args.workers, svg=args.svg)
    for row in result.summary:
        med = row["eps_u"]["median"] if row["eps_u"] else float("nan")
        print(f"N={row['N']:<5d} {row['method']:<16s} median eps_u={med:.4g} "
              f"failures={row['failures']}")
    return EXIT_PARTIAL if result.failures else EXIT_OK


def _jl(args) -> int:
    from .harness.jl import jl_concentration_experiment, write_jl_csv

    rows = jl_concentration_experiment(args.d, args.p, args.N, args.trials, args.seed)
    write_jl_csv(rows, args.out)
    for r in rows:
        print(f"N={r.N:<5d} mean={r.mean:.4f} stderr={r.stderr:.4f} "
              f"exceed(0.5)={r.exceedance[0.5]:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genmod-pce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a dataset CSV and metadata JSON")
    g.add_argument("--generator", choices=["elliptic1d", "synthetic"], default="elliptic1d")
    g.add_argument("--d", type=int, default=14)
    g.add_argument("--p", type=int, default=3, help="total degree (synthetic generator only)")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--L", type=float, default=0.2)
    g.add_argument("--a-bar", type=float, default=0.1)
    g.add_argument("--sigma", type=float, default=0.03)
    g.add_argument("--element-count", type=int, default=64)
    g.add_argument("--noise-level", type=float, default=0.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_gen_data)

    f = sub.add_parser("fit", help="fit one method to one dataset")
    f.add_argument("--data", required=True)
    f.add_argument("--method", choices=METHODS, default="genmod")
    f.add_argument("--p", type=int, default=3)
    f.add_argument("--va-fraction", type=float, default=0.2)
    f.add_argument("--learning-rate", type=float, default=GenModConfig.learning_rate)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True, help="coefficients CSV")
    f.add_argument("--diagnostics", help="diagnostics JSON (default <out>.json)")
    f.set_defaults(func=_fit)

    b = sub.add_parser("benchmark", help="replicated comparison from a JSON config")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--svg", action="store_true")
    b.set_defaults(func=_benchmark)

    j = sub.add_parser("jl-experiment", help="norm concentration tail table")
    j.add_argument("--d", type=int, default=8)
    j.add_argument("--p", type=int, default=2)
    j.add_argument("--N", type=int, nargs="+", default=[50, 100, 200, 400])
    j.add_argument("--trials", type=int, default=1000)
    j.add_argument("--seed", type=int, default=0)
    j.add_argument("--out", required=True)
    j.set_defaults(func=_jl)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
