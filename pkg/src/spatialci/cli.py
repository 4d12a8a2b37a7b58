"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 convergence-gate failure (``fit``).
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import harness
from .bayes import default_priors, write_draws_binary, write_draws_csv
from .errors import InvalidArgumentError, MissingColumnError, SchemaError
from .graphs import SCENARIOS, backdoor_paths, build_scenario, d_separated, parse_query

EXIT_OK, EXIT_INVALID, EXIT_GATE = 0, 2, 3

TABLE_SCENARIOS = ("2a", "2b", "2c", "2d", "2e", "2f")
TABLE_SIZES = (200, 350, 500)


def _emit(table: harness.ResultTable, out, fmt: str) -> None:
    if out:
        harness.write_table(table, out, fmt)
        print(f"wrote {len(table)} rows to {out}")
    else:
        sys.stdout.write(harness.format_markdown(table))


def _progress(verbose):
    if not verbose:
        return None

    def show(k, rep):
        rh = rep.get("rhat")
        rh = "" if rh is None else " rhat=" + ",".join(f"{v:.3f}" for v in rh.values())
        print(f"  replication {k} done{rh}", file=sys.stderr, flush=True)

    return show


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    settings = harness.read_config(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise InvalidArgumentError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip()] = v.strip()
    for key in ("design", "scenario_id", "n_units", "n_replications", "methods", "seed", "workers", "n_iter", "n_burnin", "thin"):
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = str(val)
    spec = harness.ExperimentSpec.from_mapping(settings)
    if spec.design == "paired-binary":
        variants = [v for v in harness.pair_table_variants() if v.scenario == spec.scenario_id]
        table = harness.run_motivating_pairs(spec, variants)
    elif "bayes" not in spec.methods and args.all_sets:
        variants = [v for v in harness.network_table_variants() if v.scenario == spec.scenario_id]
        table = harness.run_motivating_network(spec, variants)
    else:
        table = harness.run_main_simulation(spec, progress=_progress(args.verbose))
    _emit(table, args.out or spec.output, args.format)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    t = args.table.upper()
    if t == "1":
        reps = args.reps or 300
        spec = harness.ExperimentSpec(design="paired-binary", n_units=400, n_replications=reps, methods=("ols",), seed=args.seed, workers=args.workers)
        table = harness.run_motivating_pairs(spec)
    elif t == "S1":
        reps = args.reps or 200
        spec = harness.ExperimentSpec(design="network-line", n_units=100, n_replications=reps, methods=("ols",), seed=args.seed, workers=args.workers)
        table = harness.run_motivating_network(spec)
    elif t in ("2", "S2"):
        design = "network-line" if t == "2" else "paired-gaussian"
        reps = args.reps or (500 if args.full else 100)
        scenarios = args.scenario or TABLE_SCENARIOS
        sizes = args.n or TABLE_SIZES
        table = harness.ResultTable()
        for sid in scenarios:
            for n in sizes:
                spec = harness.ExperimentSpec(
                    design=design,
                    scenario_id=sid,
                    n_units=n,
                    n_replications=reps,
                    seed=args.seed,
                    workers=args.workers,
                    n_iter=args.n_iter,
                    n_burnin=args.n_burnin,
                    thin=args.thin,
                )
                print(f"{design} scenario {sid} n={n}: {reps} replications", file=sys.stderr, flush=True)
                table.extend(harness.run_main_simulation(spec, progress=_progress(args.verbose)))
    else:
        raise InvalidArgumentError(f"unknown table {args.table!r}; expected 1, 2, S1 or S2")
    _emit(table, args.out, args.format)
    return EXIT_OK


def cmd_analyze(args) -> int:
    gh = (args.gh_adjacency,) if args.gh_adjacency else (1, 2)
    cov = [c.strip() for c in args.covariates.split(",")] if args.covariates else None
    report = harness.analyze_csv(
        args.data,
        args.edges,
        log_exposure=args.log_exposure,
        gh_degrees=gh,
        exposure_degree=args.exposure_adjacency,
        covariates=cov,
        n_iter=args.n_iter,
        n_burnin=args.n_burnin,
        thin=args.thin,
        seed=args.seed,
    )
    print(report.to_text())
    if args.out:
        report.write_csv(args.out)
        print(f"wrote report to {args.out}")
    return EXIT_OK


def cmd_dsep(args) -> int:
    dag = build_scenario(args.scenario, not args.no_z_spatial, not args.no_u_spatial)
    if args.query:
        x, y, cond = parse_query(args.query)
        sep = d_separated(dag, x, y, cond)
        given = ",".join(cond) if cond else "{}"
        print(f"{x} _||_ {y} | {given}: {'d-separated' if sep else 'd-connected'}")
    if args.backdoor:
        t, o = args.backdoor
        cond = tuple(c.strip() for c in (args.given or "").split(",") if c.strip())
        print(backdoor_paths(dag, t, o, cond).to_text())
    if not args.query and not args.backdoor:
        raise InvalidArgumentError("give --query and/or --backdoor")
    return EXIT_OK


def cmd_fit(args) -> int:
    ds, base, _ = harness.prepare_analysis_data(
        args.data, args.edges, args.log_exposure, args.exposure_adjacency, need_first_degree=args.gh_adjacency == 1
    )
    gh = base if args.gh_adjacency == 1 else harness.second_degree(base)
    default_priors(ds, gh)  # surfaces data problems before any sampling
    bf = harness.fit_bayes(ds, gh, n_iter=args.n_iter, n_burnin=args.n_burnin, thin=args.thin, seed=args.seed, keep_u=args.keep_u)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, ch in enumerate(bf.chains, 1):
        write_draws_csv(ch, out / f"chain{k}.csv", out / f"chain{k}_U.csv" if args.keep_u else None)
        write_draws_binary(ch, out / f"chain{k}.draws")
    for p, (m, lo, hi) in bf.summary.items():
        print(f"{p:<10} mean {m: .4f}  95% CI ({lo: .4f}, {hi: .4f})")
    print("split R-hat: " + ", ".join(f"{k}={v:.4f}" for k, v in bf.rhat.items()))
    if not bf.converged:
        print(f"convergence gate failed (R-hat >= {harness.RHAT_GATE})", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_standin(args) -> int:
    config = harness.write_standin(args.data, args.edges, n=args.n, seed=args.seed)
    print(f"wrote synthetic stand-in ({args.n} units, scenario {config.scenario_id}) to {args.data} and {args.edges}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _sampler_opts(p):
    p.add_argument("--n-iter", type=int, default=harness.DEFAULT_N_ITER)
    p.add_argument("--n-burnin", type=int, default=harness.DEFAULT_BURNIN)
    p.add_argument("--thin", type=int, default=harness.DEFAULT_THIN)
    p.add_argument("--seed", type=int, default=2024)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spatialci", description="Spatial confounding and interference: simulation and analysis.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment (flags or key=value config file)")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--design", choices=harness.DESIGNS)
    p.add_argument("--scenario", dest="scenario_id")
    p.add_argument("--n", dest="n_units", type=int)
    p.add_argument("--reps", dest="n_replications", type=int)
    p.add_argument("--methods")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--n-iter", dest="n_iter", type=int)
    p.add_argument("--n-burnin", dest="n_burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--all-sets", action="store_true", help="OLS under all five conditioning sets (network design, no bayes)")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="regenerate a results table")
    p.add_argument("--table", required=True, choices=("1", "2", "S1", "S2", "s1", "s2"))
    p.add_argument("--full", action="store_true", help="500 replications for the Bayesian tables")
    p.add_argument("--reps", type=int)
    p.add_argument("--scenario", action="append", choices=TABLE_SCENARIOS)
    p.add_argument("--n", action="append", type=int)
    p.add_argument("--workers", type=int, default=1)
    _sampler_opts(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("analyze", help="OLS and Bayesian analysis of a CSV with an edge list")
    p.add_argument("--data", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--log-exposure", action="store_true")
    p.add_argument("--gh-adjacency", type=int, choices=(1, 2), help="only this G/H adjacency (default: both)")
    p.add_argument("--exposure-adjacency", type=int, choices=(1, 2), default=2)
    p.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
    _sampler_opts(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dsep", help="d-separation queries and back-door paths")
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--query", help='e.g. "Z2 _||_ Y1 | Z1,U1"')
    p.add_argument("--backdoor", nargs=2, metavar=("TREATMENT", "OUTCOME"))
    p.add_argument("--given", help="conditioning set for --backdoor")
    p.add_argument("--no-z-spatial", action="store_true")
    p.add_argument("--no-u-spatial", action="store_true")
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("fit", help="single Bayesian fit; draws written to --out")
    p.add_argument("--data", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--log-exposure", action="store_true")
    p.add_argument("--gh-adjacency", type=int, choices=(1, 2), default=1)
    p.add_argument("--exposure-adjacency", type=int, choices=(1, 2), default=1)
    p.add_argument("--keep-u", action="store_true")
    p.add_argument("--out", default="draws")
    _sampler_opts(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("standin", help="write the synthetic stand-in data set")
    p.add_argument("--data", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--n", type=int, default=445)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_standin)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (InvalidArgumentError, SchemaError, MissingColumnError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
