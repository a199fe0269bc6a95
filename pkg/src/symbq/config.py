"""Benchmark configuration files and measure tags.

Config grammar: one `key = value` pair per line, where the value is a Python
literal (number, "string", [list, ...]), blank lines and `#` comments
allowed. Parsing and serialization round-trip up to key order.
"""

import ast
from typing import Any

import numpy as np

from .embeddings import BoxLebesgue, GaussianIso, Measure
from .errors import InvalidInputError

__all__ = ["parse_config_text", "parse_config_file", "serialize_config",
           "measure_from_config", "parse_measure_tag"]


def _strip_comment(line: str) -> str:
    out = []
    quote = None
    for ch in line:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            break
        out.append(ch)
    return "".join(out)


def parse_config_text(text: str) -> dict[str, Any]:
    config: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key.isidentifier():
            raise InvalidInputError(f"config line {lineno}: bad key {key!r}")
        try:
            config[key] = ast.literal_eval(value.strip())
        except (ValueError, SyntaxError):
            raise InvalidInputError(
                f"config line {lineno}: value {value.strip()!r} is not a literal"
            ) from None
    return config


def parse_config_file(path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def serialize_config(config: dict[str, Any]) -> str:
    lines = [f"{key} = {value!r}" for key, value in config.items()]
    return "\n".join(lines) + "\n"


def measure_from_config(config: dict[str, Any], dim: int) -> Measure:
    """Build the integration measure from config keys.

    Box keys: `lower`, `upper` (scalars broadcast over dimensions).
    Gaussian keys: `mean` (scalar or list) and `var`.
    """
    kind = config.get("measure", "box")
    if kind == "box":
        lower = config.get("lower", -3.0)
        upper = config.get("upper", 3.0)
        lower = tuple(np.broadcast_to(np.asarray(lower, dtype=float), (dim,)).tolist())
        upper = tuple(np.broadcast_to(np.asarray(upper, dtype=float), (dim,)).tolist())
        return BoxLebesgue(lower=lower, upper=upper)
    if kind == "gaussian":
        mean = config.get("mean", 1.0)
        var = float(config.get("var", 1.0))
        mean = tuple(np.broadcast_to(np.asarray(mean, dtype=float), (dim,)).tolist())
        return GaussianIso(mean=mean, variance=var)
    raise InvalidInputError(f"unknown measure kind {kind!r} (expected 'box' or 'gaussian')")


def parse_measure_tag(tag: str, dim: int) -> Measure:
    """Parse the compact measure syntax used on the command line and in CSVs.

    box[-3:3]            same bounds on every axis
    box[-3:3]x[-2:2]     per-axis bounds
    gauss[1|1;1]         mean entries joined by '|', then ';variance'
    """
    tag = tag.strip()
    if tag.startswith("box"):
        body = tag[3:]
        sides = [s for s in body.replace("]x[", "]|[").split("|") if s]
        bounds = []
        for side in sides:
            side = side.strip("[]")
            try:
                lo, hi = (float(v) for v in side.split(":"))
            except ValueError:
                raise InvalidInputError(f"bad box side {side!r} in measure tag {tag!r}") from None
            bounds.append((lo, hi))
        if len(bounds) == 1:
            bounds = bounds * dim
        if len(bounds) != dim:
            raise InvalidInputError(f"measure tag {tag!r} has {len(bounds)} sides, expected {dim}")
        return BoxLebesgue(lower=tuple(b[0] for b in bounds), upper=tuple(b[1] for b in bounds))
    if tag.startswith("gauss"):
        body = tag[5:].strip("[]")
        try:
            mean_part, var_part = body.split(";")
            mean = tuple(float(v) for v in mean_part.replace(",", "|").split("|"))
            var = float(var_part)
        except ValueError:
            raise InvalidInputError(f"bad Gaussian measure tag {tag!r}") from None
        if len(mean) == 1:
            mean = mean * dim
        if len(mean) != dim:
            raise InvalidInputError(f"measure tag {tag!r} has {len(mean)} mean entries, expected {dim}")
        return GaussianIso(mean=mean, variance=var)
    raise InvalidInputError(f"unknown measure tag {tag!r} (expected box[...] or gauss[...])")
