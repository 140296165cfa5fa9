"""Trajectory CSV and report JSON files."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .sim_verify import Trajectory


def csv_header(q: int) -> list[str]:
    return (["t", "agent"] + [f"p{c}" for c in range(1, q + 1)]
            + [f"v{c}" for c in range(1, q + 1)] + [f"u{c}" for c in range(1, q + 1)])


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """One row per (sample, agent), time-major; floats use shortest round-trip repr."""
    q = traj.positions.shape[-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(q))
        for n, t in enumerate(traj.times):
            for i in range(traj.positions.shape[1]):
                vals = np.concatenate([traj.positions[n, i], traj.velocities[n, i], traj.controls[n, i]])
                w.writerow([repr(float(t)), i] + [repr(float(v)) for v in vals])


def read_trajectory_csv(path, provenance: str = "simulated") -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    q = (len(header) - 2) // 3
    if header != csv_header(q):
        raise ValueError(f"{path}: unexpected header {header}")
    agents = sorted({int(r[1]) for r in body})
    n_agents = len(agents)
    data = np.array([[float(x) for x in r[2:]] for r in body]).reshape(-1, n_agents, 3 * q)
    times = np.array([float(r[0]) for r in body[::n_agents]])
    step = float(times[1] - times[0]) if times.size > 1 else 0.0
    return Trajectory(times, step, data[..., :q], data[..., q:2 * q], data[..., 2 * q:], provenance)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")
