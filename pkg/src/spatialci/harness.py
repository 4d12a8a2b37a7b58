"""Replication engine: motivating OLS tables, main simulations, data analysis.

Every replication draws from RNG streams keyed by ``(seed, *key, r)`` so
aggregates do not depend on execution order or on the number of workers.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bayes import default_priors, posterior_summary, run_chain, split_rhat
from .bayes.sampler import DEFAULT_BURNIN, DEFAULT_N_ITER, DEFAULT_THIN
from .datagen import (
    BETA_C,
    GAMMA_C,
    Dataset,
    ScenarioConfig,
    generate_network_dataset,
    generate_paired_binary_dataset,
    main_simulation_config,
    replication_rng,
)
from .errors import InvalidArgumentError, MissingColumnError, SchemaError
from .ols import TABLE_SETS, ConditioningSet, fit_conditioning_set, fit_ols
from .spatial import (
    AdjacencyStructure,
    car_precision,
    from_edge_list,
    joint_precision,
    line_adjacency,
    neighbor_average,
    pair_adjacency,
    read_edge_list,
    sample_from_precision,
    second_degree,
)

log = logging.getLogger(__name__)

DESIGNS = ("paired-binary", "paired-gaussian", "network-line")
METHODS = ("ols", "bayes")
RHAT_GATE = 1.02


# -- experiment description ----------------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    design: str = "network-line"
    scenario_id: str = "2a"
    n_units: int = 200
    n_replications: int = 100
    methods: tuple = ("ols", "bayes")
    seed: int = 2024
    config_overrides: dict = field(default_factory=dict)
    n_iter: int = DEFAULT_N_ITER
    n_burnin: int = DEFAULT_BURNIN
    thin: int = DEFAULT_THIN
    n_chains: int = 2
    rhat_threshold: float = RHAT_GATE
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise InvalidArgumentError(f"design must be one of {DESIGNS}, got {self.design!r}")
        if self.n_replications < 1:
            raise InvalidArgumentError("n_replications must be >= 1")
        methods = tuple(self.methods)
        if not methods or set(methods) - set(METHODS):
            raise InvalidArgumentError(f"methods must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.n_units < 4:
            raise InvalidArgumentError("n_units must be >= 4")
        if self.design.startswith("paired") and self.n_units % 2:
            raise InvalidArgumentError("paired designs need an even number of units")
        if not self.n_iter > self.n_burnin >= 0 or self.thin < 1:
            raise InvalidArgumentError("need n_iter > n_burnin >= 0 and thin >= 1")
        if self.n_chains < 2 and "bayes" in methods:
            raise InvalidArgumentError("the convergence gate needs at least two chains")

    @property
    def n_pairs(self) -> int:
        return self.n_units // 2

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentSpec":
        """Build from flat ``key -> str`` pairs (config files, CLI).

        Unknown keys that name a :class:`ScenarioConfig` field become data
        generating overrides; anything else is an error.
        """
        names = {f.name: f for f in dataclasses.fields(cls)}
        scen = {f.name for f in dataclasses.fields(ScenarioConfig)}
        kw, over = {}, {}
        for key, raw in mapping.items():
            key = key.strip()
            if key == "n_pairs":
                kw["n_units"] = 2 * int(raw)
            elif key in names and key != "config_overrides":
                kw[key] = _coerce(names[key], raw)
            elif key in scen:
                over[key] = _parse_tuple(raw) if key in ("betaC", "gammaC") else float(raw)
            else:
                raise InvalidArgumentError(f"unknown setting {key!r}")
        kw["config_overrides"] = over
        return cls(**kw)


def _parse_tuple(raw) -> tuple:
    if isinstance(raw, (tuple, list)):
        return tuple(float(x) for x in raw)
    raw = str(raw).strip("()[] ")
    return tuple(float(x) for x in raw.split(",") if x.strip())


def _coerce(f: dataclasses.Field, raw):
    if not isinstance(raw, str):
        return raw
    if f.name == "methods":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if f.name in ("rhat_threshold",):
        return float(raw)
    if f.name in ("design", "scenario_id", "output"):
        return raw.strip()
    try:
        return int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{f.name} must be an integer, got {raw!r}") from None


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise InvalidArgumentError(f"{path}:{lineno}: expected key=value, got {line!r}")
        k, v = s.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# -- results -----------------------------------------------------------------

COLUMNS = (
    "scenario",
    "variant",
    "method",
    "model",
    "n",
    "n_reps",
    "n_converged",
    "bias_Z",
    "rmse_Z",
    "coverage_Z",
    "mcse_bias_Z",
    "mcse_coverage_Z",
    "halfwidth_Z",
    "bias_Zbar",
    "rmse_Zbar",
    "coverage_Zbar",
    "mcse_bias_Zbar",
    "mcse_coverage_Zbar",
    "halfwidth_Zbar",
)
_TEXT_COLUMNS = ("scenario", "variant", "method", "model")
_INT_COLUMNS = ("n", "n_reps", "n_converged")


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)  # dicts keyed by COLUMNS

    def __len__(self):
        return len(self.rows)

    def keys(self):
        return [(r["scenario"], r["variant"], r["method"], r["model"], r["n"]) for r in self.rows]

    def find(self, scenario, method, model=None, variant="", n=None) -> dict:
        hits = [
            r
            for r in self.rows
            if r["scenario"] == scenario
            and r["method"] == method
            and (model is None or r["model"] == model)
            and r["variant"] == variant
            and (n is None or r["n"] == n)
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {(scenario, variant, method, model, n)}")
        return hits[0]

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)


def _row(**kw) -> dict:
    row = {c: math.nan for c in COLUMNS}
    row.update(variant="", n_converged=0)
    row.update(kw)
    return row


def _metrics(est, lo, hi, truth) -> dict:
    """Bias, rMSE, coverage (%) and their Monte Carlo standard errors."""
    est = np.asarray(est, dtype=float)
    r = est.size
    if r == 0:
        return dict(bias=math.nan, rmse=math.nan, coverage=math.nan, mcse_bias=math.nan, mcse_coverage=math.nan, halfwidth=math.nan)
    err = est - truth
    out = dict(
        bias=float(err.mean()),
        rmse=float(np.sqrt(np.mean(err**2))),
        mcse_bias=float(err.std(ddof=1) / math.sqrt(r)) if r > 1 else math.nan,
    )
    if lo is None:
        out.update(coverage=math.nan, mcse_coverage=math.nan, halfwidth=math.nan)
    else:
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        c = float(np.mean((lo <= truth) & (truth <= hi)))
        out.update(
            coverage=100 * c,
            mcse_coverage=100 * math.sqrt(c * (1 - c) / r),
            halfwidth=float(np.mean((hi - lo) / 2)),
        )
    return out


def _aggregate_row(base: dict, results: list, truth_z: float, truth_zbar: float) -> dict:
    """``results`` holds per-replication dicts with (est, lo, hi) for Z and Zbar."""
    row = _row(**base)
    row["n_reps"] = base.get("n_reps", len(results))
    ok = [r for r in results if r is not None]
    row["n_converged"] = len(ok)
    for tag, truth in (("Z", truth_z), ("Zbar", truth_zbar)):
        vals = [r[tag] for r in ok if r.get(tag) is not None]
        if not vals:
            continue
        est = [v[0] for v in vals]
        has_ci = vals[0][1] is not None
        lo = [v[1] for v in vals] if has_ci else None
        hi = [v[2] for v in vals] if has_ci else None
        m = _metrics(est, lo, hi, truth)
        for k, v in m.items():
            row[f"{k}_{tag}"] = v
    return row


def format_markdown(table: ResultTable) -> str:
    """Markdown rendering with rows grouped by scenario."""
    lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
    last = None
    for r in table.rows:
        cells = [_fmt_cell(r[c]) for c in COLUMNS]
        if r["scenario"] == last:
            cells[0] = ""
        last = r["scenario"]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_table(table: ResultTable, path, fmt: str = "csv") -> None:
    """Deterministic column order; floats in CSV keep full precision."""
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in table.rows:
                w.writerow([_fmt_cell(r[c], full=True) for c in COLUMNS])
        return
    if fmt != "markdown":
        raise InvalidArgumentError(f"unknown table format {fmt!r}")
    path.write_text(format_markdown(table))


def _fmt_cell(v, full=False) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "" if not full else "nan"
    return repr(float(v)) if full else f"{v:.3f}"


def read_table(path) -> ResultTable:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = {}
        for c in COLUMNS:
            v = r[c]
            if c in _TEXT_COLUMNS:
                d[c] = v
            elif c in _INT_COLUMNS:
                d[c] = int(v)
            else:
                d[c] = float(v)
        out.append(d)
    return ResultTable(out)


# -- parallel map --------------------------------------------------------------


def _map(fn, args: list, workers: int) -> list:
    if workers <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args, chunksize=max(1, len(args) // (4 * workers))))


# -- motivating tables (OLS only) ---------------------------------------------


@dataclass(frozen=True)
class Variant:
    scenario: str
    label: str
    config: ScenarioConfig
    note: str = ""


def pair_table_variants(strict_2b: bool = True) -> list[Variant]:
    """Rows of the paired-binary motivating table.

    Rows labelled ``2b`` use the ``2e`` configuration (``betaUZ = 1``,
    ``betaU = betaUbar = 0``) with ``phiZ`` varied. The version that follows
    the 2b graph exactly (``betaUZ = 0``) is reported as ``2b-strict``.
    """
    f = ScenarioConfig.for_scenario
    out = [Variant("2a", "", f("2a", "binary-pair"))]
    for phi in (0.7, 0.5, 0.3):
        out.append(Variant("2b", f"phiZ={phi}", f("2e", "binary-pair", phiZ=phi, betaUZ=1.0), "2e-config"))
    if strict_2b:
        for phi in (0.7, 0.5, 0.3):
            out.append(Variant("2b-strict", f"phiZ={phi}", f("2b", "binary-pair", phiZ=phi)))
    out.append(Variant("2c", "", f("2c", "binary-pair")))
    for phi in (0.5, 0.0):
        out.append(Variant("2d", f"phiZ={phi}", f("2d", "binary-pair", phiZ=phi)))
    for b in (1.5, 1.0, 0.5):
        out.append(Variant("2e", f"betaUZ={b}", f("2e", "binary-pair", betaUZ=b)))
    out.append(Variant("2f", "", f("2f", "binary-pair")))
    return out


def network_table_variants(strict_2b: bool = True) -> list[Variant]:
    """Rows of the line-graph motivating table (same convention for ``2b``)."""
    f = ScenarioConfig.for_scenario
    out = [Variant("2a", "", f("2a"))]
    for phi in (0.6, 0.4, 0.2):
        out.append(Variant("2b", f"phiZ={phi}", f("2e", phiZ=phi), "2e-config"))
    if strict_2b:
        for phi in (0.6, 0.4, 0.2):
            out.append(Variant("2b-strict", f"phiZ={phi}", f("2b", phiZ=phi)))
    out.append(Variant("2c", "", f("2c")))
    for phi in (0.4, 0.0):
        out.append(Variant("2d", f"phiZ={phi}", f("2d", phiZ=phi)))
    for rho in (0.15, 0.35, 0.45):
        out.append(Variant("2e", f"rho={rho}", f("2e", rho=rho)))
    out.append(Variant("2f", "", f("2f")))
    return out


def _ols_sets_replication(args):
    kind, config, n_units, seed, key, r = args
    rng = replication_rng(seed, *key, r)
    if kind == "pairs":
        ds = generate_paired_binary_dataset(n_units // 2, config, rng)
    else:
        ds = generate_network_dataset(line_adjacency(n_units), config, None, rng)
    out = []
    for cond in TABLE_SETS:
        fit = fit_conditioning_set(ds, cond)
        res = {"Z": (fit["z"], *fit.interval("z"))}
        if cond.include_zbar:
            res["Zbar"] = (fit["zbar"], *fit.interval("zbar"))
        out.append(res)
    return out


def _run_ols_grid(kind: str, variants: list[Variant], spec: ExperimentSpec) -> ResultTable:
    table = ResultTable()
    for v_idx, var in enumerate(variants):
        args = [(kind, var.config, spec.n_units, spec.seed, (v_idx,), r) for r in range(spec.n_replications)]
        reps = _map(_ols_sets_replication, args, spec.workers)
        for j, cond in enumerate(TABLE_SETS):
            base = dict(scenario=var.scenario, variant=var.label, method="ols", model=cond.label, n=spec.n_units, n_reps=spec.n_replications)
            table.rows.append(_aggregate_row(base, [rep[j] for rep in reps], var.config.betaZ, var.config.betaZbar))
    return table


def run_motivating_pairs(spec: ExperimentSpec, variants: list[Variant] | None = None) -> ResultTable:
    """OLS bias under the five conditioning sets for every paired-binary row."""
    if spec.design != "paired-binary":
        raise InvalidArgumentError("run_motivating_pairs needs design='paired-binary'")
    variants = pair_table_variants() if variants is None else variants
    return _run_ols_grid("pairs", variants, spec)


def run_motivating_network(spec: ExperimentSpec, variants: list[Variant] | None = None) -> ResultTable:
    """OLS bias under the five conditioning sets on a line graph."""
    if spec.design != "network-line":
        raise InvalidArgumentError("run_motivating_network needs design='network-line'")
    variants = network_table_variants() if variants is None else variants
    return _run_ols_grid("network", variants, spec)


# -- Bayesian fit with convergence gate ---------------------------------------


@dataclass
class BayesFit:
    chains: list
    rhat: dict
    summary: dict  # param -> (mean, lower, upper)
    converged: bool


def fit_bayes(
    dataset: Dataset,
    gh_adjacency: AdjacencyStructure | None = None,
    n_chains: int = 2,
    n_iter: int = DEFAULT_N_ITER,
    n_burnin: int = DEFAULT_BURNIN,
    thin: int = DEFAULT_THIN,
    seed: int = 0,
    stream: tuple = (),
    rhat_threshold: float = RHAT_GATE,
    gate_params=("betaZ", "betaZbar"),
    keep_u: bool = False,
) -> BayesFit:
    """Default priors, ``n_chains`` chains on independent streams, split-R-hat gate."""
    priors = default_priors(dataset, gh_adjacency)
    chains = [
        run_chain(
            dataset,
            priors,
            n_iter=n_iter,
            n_burnin=n_burnin,
            thin=thin,
            seed=seed,
            rng=replication_rng(seed, *stream, c + 1),
            gh_adjacency=gh_adjacency,
            keep_u=keep_u,
        )
        for c in range(n_chains)
    ]
    rhat = {p: split_rhat(chains, p) for p in gate_params}
    summary = {p: posterior_summary(chains, p) for p in ("betaZ", "betaZbar", "betaUbar", "sigmaY2", "rho", "phiU", "phiZ")}
    return BayesFit(chains, rhat, summary, all(v < rhat_threshold for v in rhat.values()))


# -- main simulation -----------------------------------------------------------


def main_config(spec: ExperimentSpec) -> ScenarioConfig:
    paired = spec.design == "paired-gaussian"
    return main_simulation_config(spec.scenario_id, paired=paired, **spec.config_overrides)


def _main_dataset(spec: ExperimentSpec, config: ScenarioConfig, r: int) -> Dataset:
    rng = replication_rng(spec.seed, r, 0)
    if spec.design == "network-line":
        adj = line_adjacency(spec.n_units)
    elif spec.design == "paired-gaussian":
        adj = pair_adjacency(spec.n_pairs)
    else:
        raise InvalidArgumentError("the main simulation uses Gaussian exposures")
    return generate_network_dataset(adj, config, config.p, rng, seed=spec.seed)


def _main_replication(args):
    spec, r = args
    config = main_config(spec)
    ds = _main_dataset(spec, config, r)
    out = {"ols": None, "bayes": None, "rhat": None, "error": None}
    if "ols" in spec.methods:
        fit = fit_conditioning_set(ds, ConditioningSet(include_zbar=True))
        out["ols"] = {"Z": (fit["z"], *fit.interval("z")), "Zbar": (fit["zbar"], *fit.interval("zbar"))}
    if "bayes" in spec.methods:
        try:
            bf = fit_bayes(
                ds,
                n_chains=spec.n_chains,
                n_iter=spec.n_iter,
                n_burnin=spec.n_burnin,
                thin=spec.thin,
                seed=spec.seed,
                stream=(r,),
                rhat_threshold=spec.rhat_threshold,
            )
        except Exception as exc:  # recorded and excluded, never fatal
            out["error"] = f"{type(exc).__name__}: {exc}"
            return out
        out["rhat"] = bf.rhat
        if bf.converged:
            out["bayes"] = {"Z": bf.summary["betaZ"], "Zbar": bf.summary["betaZbar"]}
    return out


def run_main_simulation(spec: ExperimentSpec, progress=None) -> ResultTable:
    """OLS on measured covariates and the Bayesian model with the R-hat gate."""
    config = main_config(spec)
    args = [(spec, r) for r in range(spec.n_replications)]
    if progress is None:
        reps = _map(_main_replication, args, spec.workers)
    else:
        reps = []
        for a in args:
            reps.append(_main_replication(a))
            progress(len(reps), reps[-1])
    table = ResultTable()
    base = dict(scenario=spec.scenario_id, variant=spec.design, n=spec.n_units, n_reps=spec.n_replications)
    if "ols" in spec.methods:
        table.rows.append(_aggregate_row(dict(base, method="ols", model="(Z,Zbar,C)"), [x["ols"] for x in reps], config.betaZ, config.betaZbar))
    if "bayes" in spec.methods:
        n_err = sum(x["error"] is not None for x in reps)
        if n_err:
            log.warning("%d of %d replications failed in the sampler and were excluded", n_err, len(reps))
        table.rows.append(_aggregate_row(dict(base, method="bayes", model="joint-CAR"), [x["bayes"] for x in reps], config.betaZ, config.betaZbar))
    return table


# -- data analysis ---------------------------------------------------------------


@dataclass
class AnalysisReport:
    rows: list  # dicts: method, estimate/ci for local and interference
    n_used: int
    dropped: list
    gh_degree: tuple

    def to_text(self) -> str:
        head = f"{'method':<34}{'local':>10}{'local 95% CI':>22}{'interference':>14}{'interference 95% CI':>24}"
        lines = [f"units analysed: {self.n_used} (dropped {len(self.dropped)})", head]
        for r in self.rows:
            li = f"({r['local_lower']:.3f}, {r['local_upper']:.3f})"
            if math.isnan(r["interference"]):
                ie, ii = "--", "--"
            else:
                ie = f"{r['interference']:.3f}"
                ii = f"({r['interference_lower']:.3f}, {r['interference_upper']:.3f})"
            lines.append(f"{r['method']:<34}{r['local']:>10.3f}{li:>22}{ie:>14}{ii:>24}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        cols = ["method", "local", "local_lower", "local_upper", "interference", "interference_lower", "interference_upper", "rhat_max", "converged"]
        with Path(path).open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            w.writeheader()
            for r in self.rows:
                w.writerow(r)


def read_analysis_csv(path, outcome="y", exposure="z", covariates=None):
    """Parse the analysis CSV: header row, numeric columns ``y``, ``z`` and covariates."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    for col in (outcome, exposure):
        if col not in header:
            raise MissingColumnError(f"{path}: missing required column {col!r}")
    if covariates is None:
        covariates = [h for h in header if h not in (outcome, exposure)]
    else:
        for c in covariates:
            if c not in header:
                raise MissingColumnError(f"{path}: missing covariate column {c!r}")
    data = {}
    for j, h in enumerate(header):
        if h not in (outcome, exposure, *covariates):
            continue
        vals = []
        for lineno, row in enumerate(rows[1:], 2):
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals.append(float(row[j]))
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: column {h!r} is not numeric: {row[j]!r}") from None
        arr = np.array(vals)
        if not np.all(np.isfinite(arr)):
            raise SchemaError(f"{path}: column {h!r} has missing or non-finite values")
        data[h] = arr
    return data[outcome], data[exposure], np.column_stack([data[c] for c in covariates]) if covariates else np.zeros((len(rows) - 1, 0)), list(covariates)


def prepare_analysis_data(
    data_path,
    edges_path,
    log_exposure: bool = False,
    exposure_degree: int = 2,
    need_first_degree: bool = True,
    covariates=None,
):
    """Read, clean and transform an analysis CSV plus edge list.

    The exposure is log-transformed (optionally) before neighbourhood
    averaging; units without a neighbour are dropped with a warning;
    covariates are standardised; outcome and exposure are centred, which
    leaves every slope unchanged.  Returns ``(dataset, first_degree, dropped)``
    where ``dataset.adjacency`` is the exposure-mapping adjacency.
    """
    if exposure_degree not in (1, 2):
        raise InvalidArgumentError("adjacency degrees must be 1 or 2")
    y, z, c, names = read_analysis_csv(data_path, covariates=covariates)
    n = y.size
    if n == 0:
        raise SchemaError(f"{data_path}: no data rows")
    base = read_edge_list(edges_path)
    if base.n > n:
        raise SchemaError(f"edge list refers to unit {base.n} but the data has {n} rows")
    if base.n < n:
        base = read_edge_list(edges_path, n=n)
    if log_exposure:
        if np.any(z <= 0):
            raise SchemaError("log exposure requested but the exposure has non-positive values")
        z = np.log(z)
    exposure_adj = second_degree(base) if exposure_degree == 2 else base
    iso = exposure_adj.isolated()
    if need_first_degree:
        iso = np.union1d(iso, base.isolated())
    dropped = [int(i) for i in iso]
    if dropped:
        warnings.warn(f"dropping {len(dropped)} units without neighbours (0-based rows {dropped})", stacklevel=2)
        keep = np.setdiff1d(np.arange(n), iso)
        y, z, c = y[keep], z[keep], c[keep]
        base = base.subgraph(keep)
        exposure_adj = exposure_adj.subgraph(keep)
    if y.size < 4:
        raise SchemaError("fewer than 4 usable units after dropping isolated ones")
    if c.shape[1]:
        sd = c.std(axis=0, ddof=1)
        if np.any(sd == 0):
            raise SchemaError(f"constant covariate column(s): {[names[j] for j in np.flatnonzero(sd == 0)]}")
        c = (c - c.mean(axis=0)) / sd
    y = y - y.mean()
    z = z - z.mean()
    zbar = neighbor_average(exposure_adj, z)
    return Dataset(exposure_adj, y, z, zbar, c, covariate_names=tuple(names)), base, dropped


def analyze_csv(
    data_path,
    edges_path,
    log_exposure: bool = False,
    gh_degrees=(1, 2),
    exposure_degree: int = 2,
    covariates=None,
    n_iter: int = DEFAULT_N_ITER,
    n_burnin: int = DEFAULT_BURNIN,
    thin: int = DEFAULT_THIN,
    seed: int = 0,
) -> AnalysisReport:
    """OLS (local only; local + neighbourhood) and the Bayesian model per G/H adjacency."""
    gh_degrees = tuple(gh_degrees)
    if not gh_degrees or any(d not in (1, 2) for d in gh_degrees):
        raise InvalidArgumentError("G/H adjacency degrees must be 1 or 2")
    ds, base, dropped = prepare_analysis_data(
        data_path, edges_path, log_exposure, exposure_degree, need_first_degree=1 in gh_degrees, covariates=covariates
    )
    y, z, zbar, c = ds.y, ds.z, ds.zbar, ds.c
    rows = []
    ones = np.ones(ds.n)
    f1 = fit_ols(y, np.column_stack([ones, z, c]))
    rows.append(_report_row("OLS local exposure only", (f1.coefficients[1], f1.ci_lower[1], f1.ci_upper[1]), None))
    f2 = fit_ols(y, np.column_stack([ones, z, zbar, c]))
    rows.append(
        _report_row(
            "OLS local & neighborhood exposure",
            (f2.coefficients[1], f2.ci_lower[1], f2.ci_upper[1]),
            (f2.coefficients[2], f2.ci_lower[2], f2.ci_upper[2]),
        )
    )
    for deg in gh_degrees:
        gh = base if deg == 1 else second_degree(base)
        bf = fit_bayes(ds, gh, n_iter=n_iter, n_burnin=n_burnin, thin=thin, seed=seed, stream=(deg,))
        label = "Bayes, first-degree G/H adjacency" if deg == 1 else "Bayes, second-degree G/H adjacency"
        row = _report_row(label, bf.summary["betaZ"], bf.summary["betaZbar"])
        row["rhat_max"] = max(bf.rhat.values())
        row["converged"] = bf.converged
        rows.append(row)
    return AnalysisReport(rows, ds.n, dropped, gh_degrees)


def _report_row(method, local, interference) -> dict:
    nan3 = (math.nan, math.nan, math.nan)
    li = interference if interference is not None else nan3
    return {
        "method": method,
        "local": float(local[0]),
        "local_lower": float(local[1]),
        "local_upper": float(local[2]),
        "interference": float(li[0]),
        "interference_lower": float(li[1]),
        "interference_upper": float(li[2]),
        "rhat_max": math.nan,
        "converged": "",
    }


# -- synthetic stand-in for the areal analysis --------------------------------


def planar_graph(n: int, rng) -> AdjacencyStructure:
    """Delaunay triangulation of uniform points: a county-like planar graph."""
    from scipy.spatial import Delaunay

    pts = rng.random((n, 2))
    tri = Delaunay(pts)
    edges = set()
    for simplex in tri.simplices:
        for a in range(3):
            for b in range(a + 1, 3):
                i, j = sorted((int(simplex[a]), int(simplex[b])))
                edges.add((i + 1, j + 1))
    return from_edge_list(n, sorted(edges))


def generate_standin(n: int = 445, seed: int = 0, p: int = 4):
    """Scenario-2f data on a random planar graph.

    ``(U, Z)`` follow the joint CAR on the first-degree graph; the exposure
    mapping averages over second-degree neighbours; the stored exposure is
    ``exp(Z)`` so the intended analysis uses ``log_exposure``.  Returns
    ``(first_degree_adjacency, y, exposure, covariates, config)``.
    """
    rng = replication_rng(seed, 0)
    adj = planar_graph(n, rng)
    config = main_simulation_config("2f", betaC=BETA_C[:p], gammaC=GAMMA_C[:p])
    c = rng.standard_normal((n, p))
    g = car_precision(adj, math.sqrt(config.tauU2), config.phiU, "conditional-U")
    h = car_precision(adj, math.sqrt(config.tauZ2), config.phiZ, "conditional-Z")
    mu_z = config.gamma0 + c @ np.asarray(config.gammaC)
    x = sample_from_precision(joint_precision(g, h, config.rho), np.concatenate([np.zeros(n), mu_z]), rng)
    u, z = x[:n], x[n:]
    expo = second_degree(adj)
    zbar, ubar = neighbor_average(expo, z), neighbor_average(expo, u)
    y = (
        config.beta0
        + config.betaZ * z
        + config.betaZbar * zbar
        + config.betaU * u
        + config.betaUbar * ubar
        + c @ np.asarray(config.betaC)
        + math.sqrt(config.sigmaY2) * rng.standard_normal(n)
    )
    return adj, y, np.exp(z), c, config


def write_standin(data_path, edges_path, n: int = 445, seed: int = 0, p: int = 4):
    from .spatial import write_edge_list

    adj, y, expo, c, config = generate_standin(n, seed, p)
    with Path(data_path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "z", *[f"c{j + 1}" for j in range(c.shape[1])]])
        for i in range(n):
            w.writerow([repr(float(y[i])), repr(float(expo[i])), *[repr(float(v)) for v in c[i]]])
    write_edge_list(adj, edges_path, header="synthetic planar stand-in, scenario 2f")
    return config
