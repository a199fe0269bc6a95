"""Command line for rendering benchmark figures from CSV files."""

import sys

import click

from .render import SchemaError, render_average_convergence, render_single_run


@click.command()
@click.option("--kind", type=click.Choice(["average-convergence", "single-run"]),
              required=True, help="Figure family to render.")
@click.option("--in", "inputs", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Input CSV (summary schema for average-convergence, "
                   "result schema for single-run). Repeatable.")
@click.option("--out", "output", required=True, type=click.Path(dir_okay=False),
              help="Output image path (png/pdf/svg by extension).")
@click.option("--functions", default=None,
              help="Comma-separated subset of functions to plot.")
@click.option("--seed", type=int, default=None,
              help="Seed to plot for single-run (default: lowest present).")
@click.option("--log/--no-log", "log_scale", default=None,
              help="Log-scale y axis (default: on for average-convergence).")
def main(kind, inputs, output, functions, seed, log_scale):
    """Render convergence figures from symbq benchmark CSVs."""
    subset = None
    if functions is not None:
        subset = {name.strip() for name in functions.split(",") if name.strip()}
        if not subset:
            raise click.UsageError("--functions given but empty")
    try:
        if kind == "average-convergence":
            path = render_average_convergence(
                list(inputs), output, functions=subset,
                log_scale=True if log_scale is None else log_scale)
        else:
            path = render_single_run(
                list(inputs), output, seed=seed, functions=subset,
                log_scale=False if log_scale is None else log_scale)
    except SchemaError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(2)
    click.echo(path)


if __name__ == "__main__":
    main()
