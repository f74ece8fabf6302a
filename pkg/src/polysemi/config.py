"""Run configuration: JSON with explicit [re, im] pairs.

Required key: ``generators`` (list of ascending coefficient lists, each
coefficient a ``[re, im]`` pair). Everything else has a default; see
``DEFAULTS`` and the optional keys read by :func:`parse_config`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import ConfigError
from .poly import ComplexPoly
from .potential import GridSpec

MAX_GRID_NODES = 1 << 24

DEFAULTS = {
    "seed": 0,
    "depth": 12,
    "sample_count": 10000,
    "grid": {"origin": [-2.0, -2.0], "spacing": 4.0 / 511, "rows": 512, "cols": 512},
    "base_point": None,
    "output_dir": ".",
}

# optional keys with their defaults
EXTRAS = {
    "mode": "stochastic",
    "burn_in": None,  # julia: defaults to depth // 2
    "exact_tail": None,  # verify: defaults to min(4, depth); elsewhere 0
    "exact_head": 0,
    "robin_offset": 0.0,
    "z0": None,
    "leja_count": 256,
    "eps_J": 1e-3,
    "green_base_point": None,
}


@dataclass(frozen=True)
class RunConfig:
    generators: tuple
    seed: int
    depth: int
    sample_count: int
    grid: GridSpec
    base_point: Optional[complex]
    output_dir: str
    extras: dict = field(default_factory=dict)


def _number(v, name) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return float(v)


def _pair(v, name) -> complex:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"{name} must be a [re, im] pair")
    return complex(_number(v[0], name), _number(v[1], name))


def _int(v, name, lo=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{name} must be >= {lo}")
    return v


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - {"generators"} - set(DEFAULTS) - set(EXTRAS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    gens = data.get("generators")
    if not isinstance(gens, list) or not gens:
        raise ConfigError("generators must be a nonempty list of coefficient lists")
    polys = []
    for i, g in enumerate(gens):
        if not isinstance(g, list) or not g:
            raise ConfigError(f"generators[{i}] must be a nonempty list of [re, im] pairs")
        polys.append(ComplexPoly([_pair(c, f"generators[{i}][{k}]") for k, c in enumerate(g)]))

    d = {**DEFAULTS, **{k: v for k, v in data.items() if k in DEFAULTS}}
    seed = _int(d["seed"], "seed")
    if not -(1 << 63) <= seed < (1 << 64):
        raise ConfigError("seed must fit in 64 bits")
    depth = _int(d["depth"], "depth", 0)
    m = _int(d["sample_count"], "sample_count", 1)

    gr = d["grid"]
    if not isinstance(gr, dict) or set(gr) != {"origin", "spacing", "rows", "cols"}:
        raise ConfigError("grid must have exactly origin, spacing, rows, cols")
    spacing = _number(gr["spacing"], "grid.spacing")
    if spacing <= 0:
        raise ConfigError("grid.spacing must be positive")
    rows, cols = _int(gr["rows"], "grid.rows", 1), _int(gr["cols"], "grid.cols", 1)
    if rows * cols > MAX_GRID_NODES:
        raise ConfigError(f"grid has {rows * cols} nodes, more than {MAX_GRID_NODES}")
    grid = GridSpec(_pair(gr["origin"], "grid.origin"), spacing, rows, cols)

    base = None if d["base_point"] is None else _pair(d["base_point"], "base_point")
    if not isinstance(d["output_dir"], str) or not d["output_dir"]:
        raise ConfigError("output_dir must be a nonempty string")

    ex = {**EXTRAS, **{k: v for k, v in data.items() if k in EXTRAS}}
    if ex["mode"] not in ("stochastic", "exhaustive"):
        raise ConfigError("mode must be 'stochastic' or 'exhaustive'")
    for key in ("burn_in", "exact_tail", "exact_head"):
        if ex[key] is not None:
            _int(ex[key], key, 0)
    ex["exact_head"] = ex["exact_head"] or 0
    if ex["burn_in"] is not None and ex["burn_in"] >= max(depth, 1):
        raise ConfigError("burn_in must be smaller than depth")
    ex["robin_offset"] = _number(ex["robin_offset"], "robin_offset")
    ex["eps_J"] = _number(ex["eps_J"], "eps_J")
    _int(ex["leja_count"], "leja_count", 2)
    for key in ("z0", "green_base_point"):
        if ex[key] is not None:
            ex[key] = _pair(ex[key], key)
    return RunConfig(tuple(polys), seed, depth, m, grid, base, d["output_dir"], ex)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(data)
