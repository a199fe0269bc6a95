"""Benchmark command line: run experiment grids, summarize results, print references.

Result CSV schema (fixed):
    function,method,measure,seed,N,mu_Z,sigma_Z,reference,rel_abs_err,wall_ms
UTF-8, LF line endings, floats with 17 significant digits. Reruns of the same
config are byte-identical except for the wall_ms column.
"""

import concurrent.futures
import csv
import glob as globmod
import io
import sys
import time
from dataclasses import dataclass

import click
import numpy as np

from .config import measure_from_config, parse_config_file, parse_measure_tag
from .embeddings import Measure
from .engine import RunSettings, mc_curve, optimal_params_by_oversampling, run_active_bq
from .errors import FormatError, InvalidInputError, OracleFailureError, SymbqError
from .gp import RbfParams
from .groups import SignFlipGroup, group_from_generators, identity_group, point_symmetry_group
from .testbed import FUNCTIONS, get_function, make_integrand, reference_integral

RESULT_HEADER = ["function", "method", "measure", "seed", "N", "mu_Z", "sigma_Z",
                 "reference", "rel_abs_err", "wall_ms"]
SUMMARY_HEADER = ["function", "method", "measure", "N", "n_seeds", "rel_abs_err_mean",
                  "rel_abs_err_std", "sigma_Z_mean", "sigma_Z_std"]

METHODS = ("standard", "invariant-point", "invariant-all", "mc")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class RunConfig:
    """One experiment cell grid: a function, a measure, methods and seeds."""

    function: str
    measure: Measure
    methods: tuple[str, ...]
    n_initial: int
    n_total: int
    seeds: tuple[int, ...]
    hyper_mode: str
    fixed_variance: float | None
    fixed_lengthscale: float | None
    oversample_n: int
    n_candidates: int
    mll_warmup: int
    generators: tuple[tuple[int, ...], ...] | None
    output: str

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise InvalidInputError(
                f"unknown function {self.function!r}; available: {', '.join(sorted(FUNCTIONS))}")
        for m in self.methods:
            if m not in METHODS:
                raise InvalidInputError(f"unknown method {m!r}; available: {', '.join(METHODS)}")
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise InvalidInputError("seeds must be non-empty and distinct")
        if self.n_initial > self.n_total:
            raise InvalidInputError("n_initial must not exceed n_total")
        if self.hyper_mode not in ("mll", "fixed"):
            raise InvalidInputError(f"unknown hyper_mode {self.hyper_mode!r}")


def load_run_config(path: str) -> RunConfig:
    raw = parse_config_file(path)
    if "function" not in raw:
        raise InvalidInputError("config must set `function`")
    function = str(raw["function"])
    descriptor = get_function(function)
    measure = measure_from_config(raw, descriptor.dim)
    generators = raw.get("generators")
    if generators is not None:
        generators = tuple(tuple(int(c) for c in g) for g in generators)
    return RunConfig(
        function=function,
        measure=measure,
        methods=tuple(raw.get("methods", ["standard", "invariant-point"])),
        n_initial=int(raw.get("n_initial", 5)),
        n_total=int(raw.get("n_total", 25)),
        seeds=tuple(int(s) for s in raw.get("seeds", range(10))),
        hyper_mode=str(raw.get("hyper_mode", "mll")),
        fixed_variance=raw.get("fixed_variance"),
        fixed_lengthscale=raw.get("fixed_lengthscale"),
        oversample_n=int(raw.get("oversample_n", 256)),
        n_candidates=int(raw.get("n_candidates", 500)),
        mll_warmup=int(raw.get("mll_warmup", 5)),
        generators=generators,
        output=str(raw.get("output", "results.csv")),
    )


def method_group(config: RunConfig, method: str) -> SignFlipGroup:
    descriptor = get_function(config.function)
    if method in ("standard", "mc"):
        return identity_group(descriptor.dim)
    if method == "invariant-point":
        return point_symmetry_group(descriptor.dim)
    if config.generators is not None:
        return group_from_generators(config.generators, descriptor.dim)
    return descriptor.declared_group


def _fixed_params_for(config: RunConfig, method: str) -> RbfParams | None:
    """Resolve fixed hyperparameters: explicit values, else oversampled fit."""
    if config.hyper_mode != "fixed" or method == "mc":
        return None
    if config.fixed_variance is not None and config.fixed_lengthscale is not None:
        return RbfParams(variance=float(config.fixed_variance),
                         lengthscale=float(config.fixed_lengthscale))
    descriptor = get_function(config.function)
    f = make_integrand(descriptor, group=method_group(config, method))
    return optimal_params_by_oversampling(f, config.measure, f.group,
                                          n=config.oversample_n, seed=0)


def _run_cell(config: RunConfig, method: str, seed: int, reference: float,
              fixed: RbfParams | None) -> list[tuple]:
    """Execute one (method, seed) cell and return result rows."""
    descriptor = get_function(config.function)
    rows = []
    mtag = config.measure.tag
    if method == "mc":
        f = make_integrand(descriptor, group=identity_group(descriptor.dim))
        t0 = time.perf_counter()
        curve = mc_curve(f, config.measure,
                         list(range(max(config.n_initial, 2), config.n_total + 1)), seed)
        wall = (time.perf_counter() - t0) * 1000.0 / max(len(curve), 1)
        for n, est, se in curve:
            rel = abs(est - reference) / abs(reference)
            rows.append((config.function, method, mtag, seed, n, est, se, reference, rel, wall))
        return rows
    f = make_integrand(descriptor, group=method_group(config, method))
    settings = RunSettings(n_initial=config.n_initial, n_total=config.n_total, seed=seed,
                           n_candidates=config.n_candidates, hyper_mode=config.hyper_mode,
                           fixed_params=fixed, mll_warmup=config.mll_warmup)
    state = run_active_bq(f, config.measure, settings)
    for entry in state.history:
        rel = abs(entry.mean - reference) / abs(reference)
        rows.append((config.function, method, mtag, seed, entry.n, entry.mean,
                     float(np.sqrt(entry.variance)), reference, rel, entry.wall_ms))
    return rows


def _cell_worker(args):
    return _run_cell(*args)


def write_result_rows(rows: list[tuple], path: str) -> None:
    rows = sorted(rows, key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RESULT_HEADER) + "\n")
        for r in rows:
            func, method, mtag, seed, n = r[:5]
            floats = ",".join(_fmt(v) for v in r[5:])
            fh.write(f"{func},{method},{mtag},{seed},{n},{floats}\n")


def run_experiment(config: RunConfig, threads: int = 1, seed_offset: int = 0) -> str:
    """Run the full grid in the config and write the result CSV."""
    descriptor = get_function(config.function)
    reference = reference_integral(descriptor, config.measure)
    seeds = [s + seed_offset for s in config.seeds]
    tasks = []
    for method in config.methods:
        fixed = _fixed_params_for(config, method)
        for seed in seeds:
            tasks.append((config, method, seed, reference, fixed))
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cell_worker, tasks))
    else:
        results = [_run_cell(*t) for t in tasks]
    rows = [row for cell in results for row in cell]
    write_result_rows(rows, config.output)
    return config.output


def read_result_file(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_HEADER:
            raise FormatError(
                f"{path}: header {reader.fieldnames} does not match {RESULT_HEADER}")
        return list(reader)


def summarize_rows(rows: list[dict]) -> list[tuple]:
    """Across-seed mean/std of the relative error and sigma_Z per (function, method, N)."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["function"], row["method"], row["measure"], int(row["N"]))
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        cell = groups[key]
        errs = np.array([float(r["rel_abs_err"]) for r in cell])
        sigmas = np.array([float(r["sigma_Z"]) for r in cell])
        out.append(key + (len(cell), errs.mean(), errs.std(), sigmas.mean(), sigmas.std()))
    return out


def write_summary(summary: list[tuple], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(SUMMARY_HEADER) + "\n")
        for func, method, mtag, n, count, em, es, sm, ss in summary:
            fh.write(f"{func},{method},{mtag},{n},{count},"
                     f"{_fmt(em)},{_fmt(es)},{_fmt(sm)},{_fmt(ss)}\n")


@click.group()
def main():
    """Bayesian quadrature benchmarks with symmetry-invariant GP priors."""


@main.command("run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for (method, seed) cells.")
@click.option("--seed-offset", type=int, default=0, show_default=True,
              help="Added to every seed in the config.")
def run_cmd(config_path, threads, seed_offset):
    """Run the experiment grid described by CONFIG_PATH."""
    try:
        config = load_run_config(config_path)
        out = run_experiment(config, threads=threads, seed_offset=seed_offset)
    except OracleFailureError as exc:
        click.echo(f"oracle failure: {exc}", err=True)
        sys.exit(3)
    except (InvalidInputError, FormatError) as exc:
        raise click.UsageError(str(exc))
    click.echo(out)


@main.command("summarize")
@click.argument("pattern")
@click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
def summarize_cmd(pattern, output):
    """Aggregate result CSVs matching PATTERN into an across-seed summary."""
    paths = sorted(globmod.glob(pattern))
    if not paths:
        raise click.UsageError(f"no files match {pattern!r}")
    try:
        rows = [row for p in paths for row in read_result_file(p)]
        write_summary(summarize_rows(rows), output)
    except (FormatError, InvalidInputError) as exc:
        raise click.UsageError(str(exc))
    click.echo(output)


@main.command("oracle")
@click.argument("function")
@click.argument("measure")
@click.option("--rtol", type=float, default=1e-10, show_default=True)
def oracle_cmd(function, measure, rtol):
    """Print the quadrature reference integral of FUNCTION under MEASURE."""
    try:
        descriptor = get_function(function)
        m = parse_measure_tag(measure, descriptor.dim)
        value = reference_integral(descriptor, m, rtol=rtol)
    except OracleFailureError as exc:
        click.echo(f"oracle failure: {exc}", err=True)
        sys.exit(3)
    except (InvalidInputError, SymbqError) as exc:
        raise click.UsageError(str(exc))
    click.echo(_fmt(value))


if __name__ == "__main__":
    main()
