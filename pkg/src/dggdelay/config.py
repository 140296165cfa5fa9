"""YAML scenario files.

Example::

    graph:
      nodes: 4
      edges: [[0, 1], [1, 2], [1, 3]]
    q: 2
    tau: 0.5
    horizon: 8.0
    agents:                      # one entry per follower
      - id: 1
        running: [1.0, 0.7, 0.5] # one weight per edge, in edge order
        terminal: [1.0, 1.0, 1.0]
        control: 1.0
        position: [-1.0, 1.0]
        velocity: [0.0, 2.0]
    leader:                      # coord is 1-based
      - {coord: 1, kind: cos, coefficient: 1.0, frequency: 1.0}
      - {coord: 2, kind: poly, coefficient: 1.0, power: 1}
    output: {samples: 801}
    tolerances: {oracle_equivalence: 1.0e-6}

The leader's initial state is taken from its trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .game_model import BasisTerm, GameSpec, LeaderTrajectory
from .graph_model import DirectedGraph, EdgeWeights
from .pipeline import DEFAULT_TOLERANCES


_TOP_KEYS = {"graph", "q", "tau", "horizon", "agents", "leader", "output", "tolerances", "seed", "step"}


def _get(d, key, path, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"{path}: missing required field '{key}'")
    v = d[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
        return v
    if kind is list and not isinstance(v, list):
        raise ConfigError(f"{path}.{key}: expected a list")
    return v


def _vector(v, n, path):
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(f"{path}: expected a list of {n} numbers")
    try:
        return [float(x) for x in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: entries must be numbers") from None


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int
    edges: tuple
    q: int
    tau: float
    horizon: float
    running: np.ndarray
    terminal: np.ndarray
    control: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    leader_terms: tuple
    samples: int = 801
    seed: int = 0
    step: float = 1e-3
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    source: str = "<memory>"

    def to_spec(self, tau: float | None = None) -> GameSpec:
        tau = self.tau if tau is None else float(tau)
        try:
            graph = DirectedGraph(self.node_count, self.edges)
            leader = LeaderTrajectory(self.q, self.leader_terms)
            pos = self.positions.copy()
            vel = self.velocities.copy()
            pos[0] = leader.position(0.0)
            vel[0] = leader.velocity(0.0)
            weights = EdgeWeights(self.running, self.terminal, self.control)
            return GameSpec(graph, weights, self.q, tau, self.horizon, pos, vel, leader)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{self.source}: {exc}") from None


def parse_config(data: dict, source: str = "<memory>") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown field(s) {sorted(unknown)}")
    g = _get(data, "graph", source)
    nodes = _get(g, "nodes", "graph", int)
    edges = _get(g, "edges", "graph", list)
    pairs = []
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise ConfigError(f"graph.edges[{k}]: expected [tail, head] node indices")
        pairs.append(tuple(e))
    m = len(pairs)
    q = _get(data, "q", source, int)
    if q not in (1, 2, 3):
        raise ConfigError(f"q: must be 1, 2 or 3, got {q}")
    tau = _get(data, "tau", source, float)
    horizon = _get(data, "horizon", source, float)

    running = np.zeros((nodes, m))
    terminal = np.zeros((nodes, m))
    control = np.zeros(nodes)
    pos = np.zeros((nodes, q))
    vel = np.zeros((nodes, q))
    seen = set()
    for idx, ag in enumerate(_get(data, "agents", source, list)):
        path = f"agents[{idx}]"
        i = _get(ag, "id", path, int)
        if not 1 <= i < nodes:
            raise ConfigError(f"{path}.id: follower ids run from 1 to {nodes - 1}")
        if i in seen:
            raise ConfigError(f"{path}.id: agent {i} listed twice")
        seen.add(i)
        running[i] = _vector(_get(ag, "running", path), m, f"{path}.running")
        terminal[i] = _vector(_get(ag, "terminal", path), m, f"{path}.terminal")
        control[i] = _get(ag, "control", path, float)
        pos[i] = _vector(_get(ag, "position", path), q, f"{path}.position")
        vel[i] = _vector(_get(ag, "velocity", path), q, f"{path}.velocity")
    missing = set(range(1, nodes)) - seen
    if missing:
        raise ConfigError(f"agents: no entry for follower(s) {sorted(missing)}")

    terms = []
    for idx, t in enumerate(data.get("leader") or []):
        path = f"leader[{idx}]"
        coord = _get(t, "coord", path, int)
        if not 1 <= coord <= q:
            raise ConfigError(f"{path}.coord: must be between 1 and {q}")
        kind = _get(t, "kind", path)
        coef = _get(t, "coefficient", path, float)
        if kind == "poly":
            param = _get(t, "power", path, int)
        elif kind in ("sin", "cos"):
            param = _get(t, "frequency", path, float)
        else:
            raise ConfigError(f"{path}.kind: expected poly, sin or cos, got {kind!r}")
        try:
            terms.append(BasisTerm(coord - 1, kind, coef, param))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    out = data.get("output") or {}
    samples = _get(out, "samples", "output", int) if "samples" in out else 801
    if samples < 2:
        raise ConfigError("output.samples: need at least 2")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (data.get("tolerances") or {}).items():
        if k not in tol:
            raise ConfigError(f"tolerances.{k}: unknown check")
        tol[k] = _get(data["tolerances"], k, "tolerances", float)
    seed = _get(data, "seed", source, int) if "seed" in data else 0
    step = _get(data, "step", source, float) if "step" in data else 1e-3

    cfg = ScenarioConfig(nodes, tuple(pairs), q, tau, horizon, running, terminal, control,
                         pos, vel, tuple(terms), samples, seed, step, tol, source)
    cfg.to_spec()  # surface domain errors at load time
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}" if mark else ""
        raise ConfigError(f"{path}:{where} invalid YAML") from None
    return parse_config(data, str(path))


def bundled_example() -> ScenarioConfig:
    """The four-node leader-follower scenario shipped with the package."""
    res = resources.files("dggdelay") / "scenarios" / "consensus_example.yaml"
    return parse_config(yaml.safe_load(res.read_text()), "consensus_example.yaml")
