"""Command line entry point: ``geoopinion simulate | ensemble | gridsearch``.

Exit codes: 0 success (a run that hit the step cap is still a success, with
its status recorded), 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import outputs
from .config import ConfigError, RunConfig, load_config
from .dynamics import run_simulation
from .experiment import (
    EnsembleSpec,
    GRID_PARAMETERS,
    grid_search_stats,
    run_ensemble,
)
from .seeding import derive_seeds
from .spatial import ConfigurationError

log = logging.getLogger("geoopinion")

# CLI flag -> config key
_OVERRIDES = {
    "n": int,
    "lambda_value": float,
    "lambda_mode": str,
    "gamma": float,
    "delta": float,
    "alpha": float,
    "b": float,
    "epsilon": float,
    "p_L": float,
    "p_R": float,
    "sigma": float,
    "max_steps": int,
    "stop_threshold": float,
    "window": int,
    "placement": str,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file (or a run manifest)")
    p.add_argument("--preset", help="built-in preset: paper-core, paper-vaccine")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--lambda", dest="lambda_value", type=float, help="reference length (see --lambda-mode)")
    p.add_argument("--lambda-mode", choices=("absolute", "diameter_fraction"))
    # --alpha/--delta/--gamma are added per command: gridsearch takes lists
    for name in ("n", "b", "epsilon", "sigma", "window"):
        p.add_argument(f"--{name}", type=_OVERRIDES[name])
    p.add_argument("--p-L", dest="p_L", type=float, help="left influencer reach")
    p.add_argument("--p-R", dest="p_R", type=float, help="right influencer reach")
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--stop-threshold", dest="stop_threshold", type=float)
    p.add_argument("--placement", choices=("triangle", "unreflected"))
    p.add_argument("--mega-switching", action="store_true", default=None)
    p.add_argument("--abs-inside-window", action="store_true", default=None)
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=JSON", help="override any config key"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoopinion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation and write trajectory files")
    _add_common(sim)
    for name in ("gamma", "delta", "alpha"):
        sim.add_argument(f"--{name}", type=float)
    sim.add_argument("--emit-edges", dest="emit_edges", type=int, action="append", metavar="STEP")
    sim.add_argument("--threads", type=int, help="threads for graph resampling (output is identical)")

    ens = sub.add_parser("ensemble", help="seeded ensemble over an optional parameter grid")
    _add_common(ens)
    for name in ("gamma", "delta", "alpha"):
        ens.add_argument(f"--{name}", type=float)
    ens.add_argument("--seeds", type=int, default=25, help="number of seeds derived from --seed")
    ens.add_argument("--seed-list", type=int, nargs="+", help="explicit seeds (overrides --seeds)")
    ens.add_argument(
        "--grid",
        action="append",
        default=[],
        metavar="NAME=V1,V2,...",
        help=f"grid axis; NAME in {', '.join(GRID_PARAMETERS)}",
    )
    ens.add_argument("--workers", type=int, default=1)

    grid = sub.add_parser("gridsearch", help="initial-graph statistics over alpha x delta x gamma")
    _add_common(grid)
    grid.add_argument("--alpha", type=float, action="append", help="repeatable; default 1..10")
    grid.add_argument("--delta", type=float, action="append", help="repeatable; default 1..10")
    grid.add_argument("--gamma", type=float, action="append", help="repeatable; default 1.5")
    grid.add_argument("--seeds", type=int, default=3, help="graph samples per cell")
    return parser


def _overrides(args: argparse.Namespace, skip: Sequence[str] = ()) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key in _OVERRIDES:
        if key in skip or key == "sigma":
            continue
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if getattr(args, "sigma", None) is not None:
        out["beliefs"] = {"sigma": args.sigma}
    for key in ("mega_switching", "abs_inside_window"):
        if getattr(args, key, None):
            out[key] = True
    for key in ("seed", "out", "threads", "emit_edges"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "--set expects KEY=JSON")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if key in ("domain", "beliefs") and isinstance(value, dict):
            out[key] = {**out.get(key, {}), **value}
        else:
            out[key] = value
    return out


def _parse_grid(items: Sequence[str]) -> dict[str, list[float]]:
    grid: dict[str, list[float]] = {}
    for item in items:
        name, sep, raw = item.partition("=")
        if not sep or name not in GRID_PARAMETERS:
            raise ConfigError("grid", f"bad axis {item!r}; use NAME=V1,V2 with NAME in {GRID_PARAMETERS}")
        try:
            grid[name] = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise ConfigError("grid", f"non-numeric value in {item!r}") from None
    return grid


def _manifest(cfg: RunConfig, out: Path, files: list[Path], extra: dict[str, Any]) -> Path:
    data = {
        "manifest_version": outputs.MANIFEST_VERSION,
        "config": cfg.to_dict(),
        "effective_lambda": cfg.effective_lambda(),
        "artifacts": {f.name: outputs.sha256(f) for f in files},
        **extra,
    }
    return outputs.write_json(out / "manifest.json", data)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.preset, _overrides(args))
    out = Path(cfg.out)
    traj = run_simulation(cfg.model_params(), cfg.seed, threads=cfg.threads, keep_graphs=cfg.emit_edges)
    files = [
        outputs.write_beliefs(out / "beliefs.csv", traj),
        outputs.write_step_summary(out / "steps.csv", traj),
        outputs.write_agents(out / "agents.csv", traj),
    ]
    missing = []
    for step in sorted(set(cfg.emit_edges)):
        if step in traj.graphs:
            files.append(outputs.write_edges(out / f"edges_step{step}.csv", traj.graphs[step]))
        else:
            missing.append(step)
    if missing:
        log.warning("run stopped at step %d; no graph for steps %s", traj.stop_step, missing)
    _manifest(
        cfg,
        out,
        files,
        {
            "seed": cfg.seed,
            "status": traj.status,
            "stop_step": traj.stop_step,
            "n_agents": traj.n,
            "edge_steps_missing": missing,
        },
    )
    print(f"{traj.status} after {traj.stop_step} steps; wrote {len(files)} files to {out}")
    return 0


def cmd_ensemble(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.preset, _overrides(args))
    grid = _parse_grid(args.grid)
    seeds = list(args.seed_list) if args.seed_list else derive_seeds(cfg.seed, args.seeds)
    spec = EnsembleSpec(cfg.model_params(), seeds, grid)
    summary = run_ensemble(spec, workers=args.workers)
    out = Path(cfg.out)
    files = [outputs.write_ensemble(out / "ensemble.csv", summary, list(grid))]
    report = {
        "cells": [
            {"cell_id": cid, "params": cell, **summary.transition_report(cid)}
            for cid, cell in enumerate(summary.cells)
        ]
    }
    files.append(outputs.write_json(out / "transitions_ci.json", report))
    non_converged = sum(not r.converged for r in summary.records)
    _manifest(cfg, out, files, {"seeds": seeds, "grid": grid, "non_converged_runs": non_converged})
    print(f"{len(summary.records)} runs ({non_converged} hit the step cap); wrote {out}")
    return 0


def cmd_gridsearch(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args.preset, _overrides(args, skip=("alpha", "delta", "gamma")))
    alphas = args.alpha or [float(a) for a in range(1, 11)]
    deltas = args.delta or [float(d) for d in range(1, 11)]
    gammas = args.gamma or [1.5]
    seeds = derive_seeds(cfg.seed, args.seeds)
    rows = grid_search_stats(cfg.model_params(), alphas, deltas, gammas, seeds)
    out = Path(cfg.out)
    files = [outputs.write_gridsearch(out / "gridsearch.csv", rows)]
    _manifest(cfg, out, files, {"seeds": seeds})
    print(f"{len(rows)} grid cells; wrote {out / 'gridsearch.csv'}")
    return 0


COMMANDS = {"simulate": cmd_simulate, "ensemble": cmd_ensemble, "gridsearch": cmd_gridsearch}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
