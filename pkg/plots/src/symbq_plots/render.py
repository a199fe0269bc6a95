"""Render convergence figures from benchmark CSVs.

Consumes only the public result/summary schemas written by the `symbq` CLI;
no access to internal state. Output files are deterministic for identical
inputs: fixed style, fixed metadata, no timestamps.
"""

import csv
from collections import OrderedDict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RESULT_HEADER = ["function", "method", "measure", "seed", "N", "mu_Z", "sigma_Z",
                 "reference", "rel_abs_err", "wall_ms"]
SUMMARY_HEADER = ["function", "method", "measure", "N", "n_seeds", "rel_abs_err_mean",
                  "rel_abs_err_std", "sigma_Z_mean", "sigma_Z_std"]

# fixed, colorblind-safe method palette; unknown methods cycle through it
_PALETTE = ["#0072B2", "#E69F00", "#009E73", "#CC79A7", "#56B4E9", "#D55E00"]

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": "symbq-plots"}}


class SchemaError(ValueError):
    """Input CSV does not match the expected public schema."""


def _read_rows(paths, expected_header):
    rows = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != expected_header:
                raise SchemaError(
                    f"{path}: columns {reader.fieldnames} do not match {expected_header}")
            rows.extend(reader)
    return rows


def _grouped(rows, functions):
    by_function = OrderedDict()
    for row in rows:
        name = row["function"]
        if functions and name not in functions:
            continue
        by_function.setdefault(name, []).append(row)
    if not by_function:
        raise SchemaError("no rows left after filtering; check --functions")
    return by_function


def _method_color(methods):
    return {m: _PALETTE[i % len(_PALETTE)] for i, m in enumerate(sorted(methods))}


def _panel_grid(n_panels):
    fig, axes = plt.subplots(1, n_panels, figsize=(4.2 * n_panels, 3.4), squeeze=False)
    return fig, axes[0]


def render_average_convergence(paths, out, functions=None, log_scale=True):
    """One panel per function: across-seed mean relative error vs N with std bands."""
    rows = _read_rows(paths, SUMMARY_HEADER)
    by_function = _grouped(rows, functions)
    fig, axes = _panel_grid(len(by_function))
    for ax, (name, frows) in zip(axes, by_function.items()):
        methods = sorted({r["method"] for r in frows})
        colors = _method_color(methods)
        for method in methods:
            mrows = sorted((r for r in frows if r["method"] == method),
                           key=lambda r: int(r["N"]))
            n = np.array([int(r["N"]) for r in mrows])
            mean = np.array([float(r["rel_abs_err_mean"]) for r in mrows])
            std = np.array([float(r["rel_abs_err_std"]) for r in mrows])
            ax.plot(n, mean, label=method, color=colors[method], lw=1.6)
            lo = np.maximum(mean - std, 1e-300 if log_scale else -np.inf)
            ax.fill_between(n, lo, mean + std, color=colors[method], alpha=0.2, lw=0)
        if log_scale:
            ax.set_yscale("log")
        ax.set_title(name)
        ax.set_xlabel("N")
        ax.set_ylabel("relative absolute error")
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, **_SAVE_KWARGS)
    plt.close(fig)
    return out


def render_single_run(paths, out, seed=None, functions=None, log_scale=False):
    """One panel per function: one run's integral estimate with +/- sigma_Z band."""
    rows = _read_rows(paths, RESULT_HEADER)
    seeds = sorted({int(r["seed"]) for r in rows})
    if not seeds:
        raise SchemaError("no data rows found")
    chosen = seeds[0] if seed is None else int(seed)
    rows = [r for r in rows if int(r["seed"]) == chosen]
    if not rows:
        raise SchemaError(f"seed {chosen} not present; available: {seeds}")
    by_function = _grouped(rows, functions)
    fig, axes = _panel_grid(len(by_function))
    for ax, (name, frows) in zip(axes, by_function.items()):
        methods = sorted({r["method"] for r in frows})
        colors = _method_color(methods)
        reference = float(frows[0]["reference"])
        for method in methods:
            mrows = sorted((r for r in frows if r["method"] == method),
                           key=lambda r: int(r["N"]))
            n = np.array([int(r["N"]) for r in mrows])
            mu = np.array([float(r["mu_Z"]) for r in mrows])
            sigma = np.array([float(r["sigma_Z"]) for r in mrows])
            ax.plot(n, mu, label=method, color=colors[method], lw=1.6)
            ax.fill_between(n, mu - sigma, mu + sigma, color=colors[method], alpha=0.2, lw=0)
        ax.axhline(reference, color="black", lw=0.8, ls="--", label="reference")
        if log_scale:
            ax.set_yscale("log")
        ax.set_title(f"{name} (seed {chosen})")
        ax.set_xlabel("N")
        ax.set_ylabel("integral estimate")
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, **_SAVE_KWARGS)
    plt.close(fig)
    return out
