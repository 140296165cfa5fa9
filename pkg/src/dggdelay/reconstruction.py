"""Node-space trajectories and actions from edge-space solutions."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .game_model import GameSpec


@dataclass(frozen=True)
class SpanningTreeMap:
    """BFS tree from the leader; ``link[j] = (parent, edge, sign)`` for ``j >= 1``.

    ``sign`` is +1 when ``j`` is the head of the edge, so
    ``x_j = x_parent + sign * z_edge``.
    """

    node_count: int
    order: tuple[int, ...]
    link: dict

    @property
    def tree_edges(self) -> set:
        return {e for _, e, _ in self.link.values()}


def spanning_tree(graph) -> SpanningTreeMap:
    link = {}
    seen = {0}
    order = [0]
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for u in graph.neighbors(v):
            if u in seen:
                continue
            # lowest-index edge joining v and u
            for k, (a, b) in enumerate(graph.edges):
                if {a, b} == {v, u}:
                    link[u] = (v, k, 1 if b == u else -1)
                    break
            seen.add(u)
            order.append(u)
            queue.append(u)
    missing = set(range(graph.node_count)) - seen
    if missing:
        raise ValueError(f"nodes {sorted(missing)} have no path from the leader")
    return SpanningTreeMap(graph.node_count, tuple(order), link)


class NodeControls:
    """Vectorized node commands ``u(s)``, shape ``(n, N+1, q)`` for ``s`` in ``[-τ, T-τ]``.

    The leader issues ``u_0(s) = p0''(s + τ)`` so that its realized motion is
    the prescribed trajectory.  Followers add the edge controls along the
    tree; before time 0 the edge controls are zero, which makes every
    command history equal to the leader's.
    """

    def __init__(self, spec: GameSpec, tree: SpanningTreeMap, xi_at, span: float):
        self.spec = spec
        self.tree = tree
        self.xi_at = xi_at
        self.span = span

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        tau = self.spec.tau
        if np.any(s < -tau - 1e-12) or np.any(s > self.span * (1 + 1e-12) + 1e-12):
            raise ValueError("command time outside [-tau, T - tau]")
        out = np.empty((s.size, self.spec.node_count, self.spec.q))
        out[:, 0] = self.spec.leader.acceleration(s + tau)
        xi = np.zeros((s.size, len(self.spec.graph.edges), self.spec.q))
        live = s >= 0
        if live.any():
            xi[live] = self.xi_at(np.minimum(s[live], self.span))
        for j in self.tree.order[1:]:
            parent, k, sign = self.tree.link[j]
            out[:, j] = out[:, parent] + sign * xi[:, k]
        return out

    def history(self, s) -> np.ndarray:
        """Commands before time 0: the leader's feedforward, shared by everyone."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lead = self.spec.leader.acceleration(s + self.spec.tau)
        return np.repeat(lead[:, None], self.spec.node_count, axis=1)


def _node_states(spec, tree, t, z):
    n = spec.node_count
    m = spec.graph.m
    lead = np.concatenate([spec.leader.position(t), spec.leader.velocity(t)], axis=-1)
    pos = np.empty((t.size, n, spec.q))
    vel = np.empty_like(pos)
    pos[:, 0], vel[:, 0] = lead[:, : spec.q], lead[:, spec.q:]
    for j in tree.order[1:]:
        parent, k, sign = tree.link[j]
        pos[:, j] = pos[:, parent] + sign * z[:, k]
        vel[:, j] = vel[:, parent] + sign * z[:, m + k]
    return pos, vel


def reconstruct_nodes(sol, spec: GameSpec, t_grid, tree: SpanningTreeMap | None = None,
                      provenance: str = "closed_form"):
    """Sampled node trajectory on ``t_grid`` (uniform, inside ``[0, T]``).

    ``sol`` is any edge solution exposing ``z(t)`` and ``xi(t)``.  Controls
    beyond ``T - τ`` are not emitted (NaN).
    """
    from .sim_verify import Trajectory

    tree = tree or spanning_tree(spec.graph)
    t = np.asarray(t_grid, dtype=float)
    pos, vel = _node_states(spec, tree, t, sol.z(t))
    span = spec.horizon - spec.tau
    ctrl = node_controls(sol, spec, tree)
    u = np.full_like(pos, np.nan)
    ok = t <= span * (1 + 1e-12)
    if ok.any():
        u[ok] = ctrl(t[ok])
    step = float(t[1] - t[0]) if t.size > 1 else 0.0
    return Trajectory(t, step, pos, vel, u, provenance)


def node_controls(sol, spec: GameSpec, tree: SpanningTreeMap | None = None) -> NodeControls:
    tree = tree or spanning_tree(spec.graph)
    return NodeControls(spec, tree, sol.xi, spec.horizon - spec.tau)


def node_states(sol, spec: GameSpec, t, tree: SpanningTreeMap | None = None) -> np.ndarray:
    """Stacked node states ``(n, 2(N+1), q)`` at arbitrary times."""
    tree = tree or spanning_tree(spec.graph)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pos, vel = _node_states(spec, tree, t, sol.z(t))
    return np.concatenate([pos, vel], axis=1)


def cycle_consistency(sol, spec: GameSpec, t_grid, tree: SpanningTreeMap | None = None,
                      z=None) -> float:
    """Largest mismatch between edge states and reconstructed node differences.

    Only non-tree edges can disagree.  ``z`` overrides the edge samples.
    """
    tree = tree or spanning_tree(spec.graph)
    t = np.asarray(t_grid, dtype=float)
    z = sol.z(t) if z is None else np.asarray(z)
    pos, vel = _node_states(spec, tree, t, z)
    m = spec.graph.m
    worst = 0.0
    for k, (a, b) in enumerate(spec.graph.edges):
        if k in tree.tree_edges:
            continue
        dp = np.linalg.norm(z[:, k] - (pos[:, b] - pos[:, a]), axis=-1)
        dv = np.linalg.norm(z[:, m + k] - (vel[:, b] - vel[:, a]), axis=-1)
        worst = max(worst, float(np.sqrt(dp**2 + dv**2).max()))
    return worst
