"""Convergence figures for symbq benchmark CSVs (public schemas only)."""

from .render import SchemaError, render_average_convergence, render_single_run

__version__ = "0.1.0"
