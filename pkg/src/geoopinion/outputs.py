"""CSV / JSON writers.

Floats are written with ``repr`` (shortest string that round-trips), so every
emitted number parses back to the identical double.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .dynamics import Trajectory
from .experiment import EnsembleSummary
from .network import Adjacency

MANIFEST_VERSION = 1


def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    if hasattr(value, "item"):  # numpy scalar
        return fmt(value.item())
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_beliefs(path: Path, traj: Trajectory) -> Path:
    rows = (
        (step, agent, float(b))
        for step, snapshot in enumerate(traj.beliefs)
        for agent, b in enumerate(snapshot)
    )
    return write_csv(path, ("step", "agent_id", "belief"), rows)


def write_step_summary(path: Path, traj: Trajectory) -> Path:
    rows = (
        (step, float(traj.mean_in_degree[step]), float(traj.mean_clustering[step]), float(traj.stopping_metric[step]))
        for step in range(len(traj.beliefs))
    )
    return write_csv(path, ("step", "mean_in_degree", "mean_clustering", "stopping_metric"), rows)


def write_agents(path: Path, traj: Trajectory) -> Path:
    rows = (
        (i, float(x), float(y), float(w), bool(lf), bool(rf))
        for i, ((x, y), w, lf, rf) in enumerate(
            zip(traj.positions, traj.weights, traj.left_flag, traj.right_flag)
        )
    )
    return write_csv(path, ("agent_id", "x", "y", "weight", "left_flag", "right_flag"), rows)


def write_edges(path: Path, adj: Adjacency) -> Path:
    return write_csv(path, ("source", "target"), adj.edges())


def read_edges(path: Path, n: int) -> Adjacency:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return Adjacency.from_edges(n, ((int(r["source"]), int(r["target"])) for r in reader))


def write_ensemble(path: Path, summary: EnsembleSummary, param_names: Sequence[str]) -> Path:
    header = [
        "cell_id",
        *param_names,
        "seed",
        "final_std",
        "stop_step",
        "mean_in_degree",
        "mean_clustering",
        "ww",
        "wh",
        "hw",
        "hh",
        "converged",
    ]
    rows = (
        [
            r.cell_id,
            *(r.cell.get(p, "") for p in param_names),
            r.seed,
            r.final_std,
            r.stop_step,
            r.mean_in_degree,
            r.mean_clustering,
            r.transitions.ww,
            r.transitions.wh,
            r.transitions.hw,
            r.transitions.hh,
            r.converged,
        ]
        for r in summary.records
    )
    return write_csv(path, header, rows)


def write_gridsearch(path: Path, rows: list[dict[str, float]]) -> Path:
    header = ("alpha", "delta", "gamma", "mean_in_degree", "mean_clustering")
    return write_csv(path, header, ([r[h] for h in header] for r in rows))
