"""Command-line entry point.

    polysemi <julia|measure|green|verify|capacity|mingen> --config PATH [--out DIR] [--threads K]

Every artifact is computed in memory first and written only after the whole
computation succeeded, each file atomically. Exit codes: 0 success, 1
unexpected internal error, 2 malformed config or arguments, 3 inadmissible
generators, 4 numerical failure, 5 unwritable output.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io, rng
from .backward import EmpiricalMeasure, SampleConfig, default_base_point, iterate_pullback, julia_sample
from .capacity import capacity_report
from .config import RunConfig, load_config
from .exceptions import ConfigError, PolysemiError
from .potential import GridField, green_partial, robin_constant, verify_identity
from .semigroup import GeneratorSet, escape_radius, minimal_generating_set, validate

COMMANDS = ("julia", "measure", "green", "verify", "capacity", "mingen")


def _coeff_pairs(G: GeneratorSet):
    return [g.to_pairs() for g in G.gens]


def _header(cmd: str, rc: RunConfig, G: GeneratorSet, threads: int) -> dict:
    return {
        "command": cmd,
        "generators": _coeff_pairs(G),
        "seed": rc.seed,
        "depth": rc.depth,
        "sample_count": rc.sample_count,
    }


def _grid_meta(g) -> dict:
    return {"origin": g.origin, "spacing": g.spacing, "rows": g.rows, "cols": g.cols}


def _sample_config(cmd, rc, G, threads, exact_tail=0):
    a = rc.base_point if rc.base_point is not None else default_base_point(G, rc.seed)
    return SampleConfig(a, rc.depth, rc.extras["mode"], rc.sample_count, rc.seed,
                        rng.SUBCOMMAND_TAGS[cmd] | rng.TAG_WALK, threads, exact_tail, rc.extras["exact_head"])


def _julia_points(cmd, rc, G, threads):
    if rc.depth < 1:
        raise ConfigError("julia sampling needs depth >= 1")
    burn = rc.extras["burn_in"] if rc.extras["burn_in"] is not None else rc.depth // 2
    cfg = _sample_config(cmd, rc, G, threads)
    cfg = SampleConfig(cfg.base_point, cfg.depth, "stochastic", cfg.sample_count, cfg.seed, cfg.tag, threads)
    return julia_sample(G, cfg, burn), cfg, burn


def cmd_julia(rc, G, threads):
    pts, cfg, burn = _julia_points("julia", rc, G, threads)
    g = rc.grid
    report = {**_header("julia", rc, G, threads), "burn_in": burn, "base_point": cfg.base_point,
              "escape_radius": escape_radius(G).R_esc, "point_count": int(pts.size), "grid": _grid_meta(g)}
    return {
        "julia.pgm": io.render_points(pts, g.origin, g.spacing, g.rows, g.cols).to_bytes(),
        "julia.csv": io.measure_csv(EmpiricalMeasure.uniform(pts)).encode(),
        "julia.json": io.dumps_report(report).encode(),
    }


def cmd_measure(rc, G, threads):
    cfg = _sample_config("measure", rc, G, threads, rc.extras["exact_tail"] or 0)
    mu = iterate_pullback(G, cfg).merged()
    report = {**_header("measure", rc, G, threads), "mode": cfg.mode, "base_point": cfg.base_point,
              "atoms": len(mu), "total_mass": mu.total_mass}
    return {"measure.csv": io.measure_csv(mu).encode(), "measure.json": io.dumps_report(report).encode()}


def cmd_green(rc, G, threads):
    a = rc.base_point if rc.base_point is not None else default_base_point(G, rc.seed)
    g = rc.grid
    vals = green_partial(G, a, g.points, rc.depth, threads=threads)
    field = GridField(g.origin, g.spacing, g.rows, g.cols, vals, ~np.isfinite(vals))
    report = {**_header("green", rc, G, threads), "base_point": a, "robin_F": robin_constant(G),
              "grid": _grid_meta(g), "values": field.values}
    return {
        "green.ppm": io.render_field(field.values, g.rows, g.cols).to_bytes(),
        "green.json": io.dumps_report(report).encode(),
    }


def cmd_verify(rc, G, threads):
    tail = rc.extras["exact_tail"]
    tail = min(4, rc.depth) if tail is None else tail
    cfg = _sample_config("verify", rc, G, threads, tail)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = verify_identity(G, cfg, rc.grid, robin_offset=rc.extras["robin_offset"],
                              green_base=rc.extras["green_base_point"], eps_J=rc.extras["eps_J"])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    fields = {k: getattr(rep, k) for k in rep.__dataclass_fields__ if k != "grid"}
    report = {**_header("verify", rc, G, threads), "mode": cfg.mode, "exact_head": cfg.exact_head,
              "exact_tail": tail, **fields,
              "grid": _grid_meta(rep.grid), "masked_nodes": int(rep.grid.mask.sum()),
              "green_substitute": "finite-depth G_n stands in for the regularised Green's function"}
    return {
        "verify.json": io.dumps_report(report).encode(),
        "verify.ppm": io.render_field(rep.grid.as_array(), rep.grid.rows, rep.grid.cols).to_bytes(),
    }


def cmd_capacity(rc, G, threads):
    pts, cfg, burn = _julia_points("capacity", rc, G, threads)
    z0 = rc.extras["z0"]
    if z0 is None:
        z0 = complex(pts[int(np.argmax(np.abs(pts)))])
    rep = capacity_report(G, pts, z0, leja_count=rc.extras["leja_count"], eps_J=rc.extras["eps_J"])
    report = {**_header("capacity", rc, G, threads), "burn_in": burn, "base_point": cfg.base_point, **{
        k: getattr(rep, k) for k in rep.__dataclass_fields__}}
    return {"capacity.json": io.dumps_report(report).encode()}


def cmd_mingen(rc, G, threads):
    M = minimal_generating_set(G)
    kept = [i for i, g in enumerate(G.gens) if any(g.allclose(h) for h in M.gens)]
    report = {"command": "mingen", "generators": _coeff_pairs(G), "minimal": _coeff_pairs(M),
              "kept_indices": kept, "removed_indices": [i for i in range(G.N) if i not in kept]}
    return {"mingen.json": io.dumps_report(report).encode()}


HANDLERS = {
    "julia": cmd_julia,
    "measure": cmd_measure,
    "green": cmd_green,
    "verify": cmd_verify,
    "capacity": cmd_capacity,
    "mingen": cmd_mingen,
}


def _threads(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("POLYSEMI_THREADS")
    if env is None:
        return 1
    try:
        k = int(env)
    except ValueError:
        raise ConfigError(f"POLYSEMI_THREADS={env!r} is not an integer") from None
    if k < 1:
        raise ConfigError("POLYSEMI_THREADS must be >= 1")
    return k


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polysemi", description="Polynomial semigroup measures and potentials.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output_dir in the config)")
    p.add_argument("--threads", type=int, help="worker threads (default: $POLYSEMI_THREADS or 1)")
    return p


def run(command: str, config_path, out=None, threads=None) -> dict:
    """Execute one subcommand and write its artifacts; returns {name: path}."""
    rc = load_config(config_path)
    k = _threads(threads)
    if k < 1:
        raise ConfigError("--threads must be >= 1")
    G = validate(rc.generators)
    artifacts = HANDLERS[command](rc, G, k)
    target = Path(out if out is not None else rc.output_dir)
    return {name: io.atomic_write(target / name, data) for name, data in artifacts.items()}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = run(args.command, args.config, args.out, args.threads)
    except PolysemiError as exc:
        print(f"polysemi {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal-error code
        print(f"polysemi {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in written.values():
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
