"""Node-space game instance: dynamics, leader motion, consensus metric and costs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph_model import DirectedGraph, EdgeWeights, check_weights, kron

_KINDS = ("poly", "sin", "cos")


@dataclass(frozen=True)
class BasisTerm:
    """One term of a leader coordinate: ``c t^p``, ``c sin(w t)`` or ``c cos(w t)``.

    ``param`` is the power ``p`` for ``poly`` and the frequency ``w`` otherwise.
    """

    coord: int
    kind: str
    coefficient: float
    param: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "poly" and (self.param < 0 or int(self.param) != self.param):
            raise ValueError("polynomial power must be a nonnegative integer")

    def evaluate(self, t, order=0):
        t = np.asarray(t, dtype=float)
        c = self.coefficient
        if self.kind == "poly":
            p = int(self.param)
            if order > p:
                return np.zeros_like(t)
            return c * math.perm(p, order) * t ** (p - order)
        w = self.param
        # derivatives cycle through ±sin/±cos; exact zeros stay exact
        shift = order % 4 + (1 if self.kind == "cos" else 0)
        fn = np.sin if shift % 2 == 0 else np.cos
        sign = -1.0 if shift % 4 >= 2 else 1.0
        return sign * c * w**order * fn(w * t)


@dataclass(frozen=True)
class LeaderTrajectory:
    """Exogenous leader motion ``p_0(t)`` as a sum of basis terms per coordinate."""

    q: int
    terms: tuple[BasisTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if not 0 <= term.coord < self.q:
                raise ValueError(f"leader term coordinate {term.coord} outside 0..{self.q - 1}")
        # derivatives are exact by construction; this guards the basis algebra
        h = 1e-5
        for t in (0.3, 1.1, 2.7):
            for order in (0, 1):
                fd = (self._eval(t + h, order) - self._eval(t - h, order)) / (2 * h)
                exact = self._eval(t, order + 1)
                if np.any(np.abs(fd - exact) > 1e-6 * (1 + np.abs(exact))):
                    raise ValueError("leader derivative check failed")

    def _eval(self, t, order):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.q,))
        for term in self.terms:
            out[..., term.coord] += term.evaluate(t, order)
        return out

    def position(self, t):
        return self._eval(t, 0)

    def velocity(self, t):
        return self._eval(t, 1)

    def acceleration(self, t):
        return self._eval(t, 2)


@dataclass(frozen=True)
class GameSpec:
    """Full problem instance.

    ``positions`` and ``velocities`` have shape ``(node_count, q)``; row 0
    must agree with the leader trajectory at ``t = 0``.
    """

    graph: DirectedGraph
    weights: EdgeWeights
    q: int
    tau: float
    horizon: float
    positions: np.ndarray
    velocities: np.ndarray
    leader: LeaderTrajectory = field(default=None)

    def __post_init__(self):
        if self.leader is None:
            object.__setattr__(self, "leader", LeaderTrajectory(self.q))
        if self.q not in (1, 2, 3):
            raise ValueError("q must be 1, 2 or 3")
        if not self.tau >= 0:
            raise ValueError("tau must be nonnegative")
        if not self.horizon > self.tau:
            raise ValueError(f"horizon T={self.horizon} must exceed the delay tau={self.tau} (T > tau)")
        if self.leader.q != self.q:
            raise ValueError("leader dimension differs from q")
        check_weights(self.graph, self.weights)
        shape = (self.graph.node_count, self.q)
        for name in ("positions", "velocities"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(np.abs(self.positions[0] - self.leader.position(0.0)) > 1e-12) or np.any(
            np.abs(self.velocities[0] - self.leader.velocity(0.0)) > 1e-12
        ):
            raise ValueError("leader initial state disagrees with the leader trajectory")

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def x0(self) -> np.ndarray:
        """Stacked initial state, shape ``(2 (N+1), q)``: positions then velocities."""
        return np.vstack([self.positions, self.velocities])

    def replace(self, **changes) -> "GameSpec":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return GameSpec(**fields)


def stacked_dynamics(spec: GameSpec):
    """Full-size ``A_0`` and input matrices ``B_i`` of the stacked node dynamics."""
    n = spec.node_count
    a = kron(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(n))
    a0 = kron(a, np.eye(spec.q))
    bs = []
    for i in range(n):
        b = np.zeros((2 * n, 1))
        b[n + i] = 1.0
        bs.append(kron(b, np.eye(spec.q)))
    return a0, bs


def _as_state(spec, x):
    x = np.asarray(x, dtype=float)
    n = spec.node_count
    if x.shape[-2:] == (2 * n, spec.q):
        return x
    if x.shape[-1] == 2 * n * spec.q:
        return x.reshape(x.shape[:-1] + (2 * n, spec.q))
    raise ValueError(f"state has shape {x.shape}; expected (..., {2 * n}, {spec.q})")


def edge_square_norms(spec: GameSpec, x) -> np.ndarray:
    """``||p_j - p_i||^2 + ||v_j - v_i||^2`` per edge, shape ``(..., m)``."""
    x = _as_state(spec, x)
    n = spec.node_count
    d = spec.graph._incidence
    zp = np.einsum("nk,...nc->...kc", d, x[..., :n, :])
    zv = np.einsum("nk,...nc->...kc", d, x[..., n:, :])
    return (zp**2).sum(-1) + (zv**2).sum(-1)


def consensus_error(spec: GameSpec, x) -> np.ndarray:
    """Weighted local disagreement of every node; shape ``(..., node_count)``.

    Entry 0 (the leader) is always zero.
    """
    return edge_square_norms(spec, x) @ spec.weights.running.T


def simpson(values, step):
    """Composite Simpson rule along axis 0.

    With an odd number of intervals the last one uses the trapezoid rule;
    the second return value reports that fallback.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0] - 1
    if n < 1:
        raise ValueError("need at least two samples")
    even = n - (n % 2)
    total = np.zeros(values.shape[1:])
    if even:
        v = values[: even + 1]
        total = step / 3 * (v[0] + v[-1] + 4 * v[1:-1:2].sum(0) + 2 * v[2:-1:2].sum(0))
    if n % 2:
        total = total + step / 2 * (values[-2] + values[-1])
    return total, bool(n % 2)


@dataclass(frozen=True)
class PerformanceReport:
    """Per-node costs; entry 0 (leader) is zero."""

    terminal: np.ndarray
    running_state: np.ndarray
    running_control: np.ndarray
    step: float
    trapezoid_tail: bool

    @property
    def running(self) -> np.ndarray:
        return self.running_state + self.running_control

    @property
    def total(self) -> np.ndarray:
        return self.terminal + self.running

    def as_dict(self) -> dict:
        return {
            str(i): {
                "J": float(self.total[i]),
                "terminal": float(self.terminal[i]),
                "running": float(self.running[i]),
                "running_state": float(self.running_state[i]),
                "running_control": float(self.running_control[i]),
            }
            for i in range(1, len(self.total))
        }


def evaluate_performance(spec: GameSpec, traj) -> PerformanceReport:
    """Costs ``J_i`` of a sampled trajectory.

    The control term integrates ``r_i ||u_i(s)||^2`` over ``s`` in
    ``[0, T - tau]``; earlier inputs are fixed history and do not count.
    """
    t = np.asarray(traj.times)
    h = traj.step
    if abs(t[0]) > 1e-12 or abs(t[-1] - spec.horizon) > 1e-9 * max(1.0, spec.horizon):
        raise ValueError("trajectory must cover [0, T]")
    x = np.concatenate([traj.positions, traj.velocities], axis=1)
    state_cost, tail_a = simpson(consensus_error(spec, x), h)
    terminal = edge_square_norms(spec, x[-1]) @ spec.weights.terminal.T

    cut = (spec.horizon - spec.tau) / h
    j = int(round(cut))
    if abs(cut - j) > 1e-6:
        raise ValueError("T - tau must lie on the sampling grid to score controls")
    r = spec.weights.control.copy()
    r[0] = 0.0
    u = np.asarray(traj.controls)[: j + 1]
    if j == 0:
        control_cost, tail_b = np.zeros(spec.node_count), False
    else:
        control_cost, tail_b = simpson((u**2).sum(-1) * r, h)
    return PerformanceReport(terminal, state_cost, control_cost, h, tail_a or tail_b)
