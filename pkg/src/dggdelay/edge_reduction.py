"""Reduction of the node game to ``m`` per-edge control problems and removal of the delay.

All matrices live in the 2m-dimensional edge space (positions of every
edge, then velocities); the ``⊗ I_q`` factor is applied by treating edge
states as ``(2m, q)`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game_model import GameSpec

INPUT_MAPS = ("shifted", "unshifted")

_NILPOTENT = np.array([[0.0, 1.0], [0.0, 0.0]])


def edge_owner(graph, k: int) -> int:
    """Agent whose weights define the control problem of edge ``k``.

    The head of the edge, unless the head is the leader.
    """
    tail, head = graph.edges[k]
    return head if head != 0 else tail


def _a_hat(m):
    return np.kron(_NILPOTENT, np.eye(m))


@dataclass(frozen=True)
class EdgeSystem:
    """The m-edge system with input delay.

    ``running[k]`` / ``terminal[k]`` hold the diagonal of the weight matrix
    used by the control problem of edge ``k`` (its owner's ``W`` and ``W_T``).
    """

    m: int
    q: int
    tau: float
    horizon: float
    owners: tuple[int, ...]
    running: np.ndarray
    terminal: np.ndarray
    r_hat: np.ndarray
    z0: np.ndarray

    @property
    def a_hat(self) -> np.ndarray:
        return _a_hat(self.m)

    def b_hat(self, k: int) -> np.ndarray:
        b = np.zeros(2 * self.m)
        b[self.m + k] = 1.0
        return b

    @property
    def mu(self) -> np.ndarray:
        return np.diag(self.running).copy()

    @property
    def omega(self) -> np.ndarray:
        return np.diag(self.terminal).copy()

    def weight_matrix(self, k: int) -> np.ndarray:
        return np.kron(np.eye(2), np.diag(self.running[k]))

    def terminal_matrix(self, k: int) -> np.ndarray:
        return np.kron(np.eye(2), np.diag(self.terminal[k]))

    def control_matrix(self, k: int) -> np.ndarray:
        b = self.b_hat(k)
        return np.outer(b, b) / self.r_hat[k]


def to_edge_system(spec: GameSpec) -> EdgeSystem:
    g = spec.graph
    d = g._incidence
    owners = tuple(edge_owner(g, k) for k in range(g.m))
    w = spec.weights
    running = np.array([w.running[o] for o in owners])
    terminal = np.array([w.terminal[o] for o in owners])
    r_hat = np.array([w.control[o] for o in owners])
    z0 = np.kron(np.eye(2), d.T) @ spec.x0
    return EdgeSystem(g.m, spec.q, float(spec.tau), float(spec.horizon), owners,
                      running, terminal, r_hat, z0)


@dataclass(frozen=True)
class DelayFreeSystem:
    """Delay-free reformulation over the shortened horizon ``T - tau``.

    ``input_map='shifted'`` uses ``B_i0 = (I - tau A) B_i`` in the
    Hamiltonian coupling ``S_i = B_i0 B_i0^T / r_i``; ``'unshifted'`` uses
    ``B_i`` there instead.  Only the shifted form solves the delayed
    problem for ``tau > 0``; the other is kept for comparison.
    """

    edges: EdgeSystem
    input_map: str
    Q: np.ndarray
    QT: np.ndarray
    B0: np.ndarray
    S: np.ndarray
    y0: np.ndarray

    @property
    def m(self) -> int:
        return self.edges.m

    @property
    def tau(self) -> float:
        return self.edges.tau

    @property
    def horizon(self) -> float:
        return self.edges.horizon - self.edges.tau

    @property
    def a_hat(self) -> np.ndarray:
        return self.edges.a_hat


def eliminate_delay(es: EdgeSystem, input_map: str = "shifted") -> DelayFreeSystem:
    if input_map not in INPUT_MAPS:
        raise ValueError(f"input_map must be one of {INPUT_MAPS}")
    if not es.horizon > es.tau:
        raise ValueError(f"horizon T={es.horizon} must exceed tau={es.tau}")
    m, tau = es.m, es.tau
    a = es.a_hat
    fwd = np.eye(2 * m) + tau * a
    back = np.eye(2 * m) - tau * a
    Q = np.array([fwd.T @ es.weight_matrix(k) @ fwd for k in range(m)])
    QT = np.array([fwd.T @ es.terminal_matrix(k) @ fwd for k in range(m)])
    if input_map == "shifted":
        B0 = np.array([back @ es.b_hat(k) for k in range(m)])
    else:
        B0 = np.array([es.b_hat(k) for k in range(m)])
    S = np.array([np.outer(B0[k], B0[k]) / es.r_hat[k] for k in range(m)])
    # z(tau) = (I + tau A) z0 with no input on [0, tau); the product is exactly I
    y0 = (back @ fwd) @ es.z0
    return DelayFreeSystem(es, input_map, Q, QT, B0, S, y0)


def costate_residual(dfs: DelayFreeSystem, y, psi_i, i: int, step: float) -> float:
    """Pontryagin residual of problem ``i`` on its own edge slot.

    ``y`` has shape ``(n, 2m, q)``; ``psi_i`` has shape ``(n, 2, q)`` and
    holds the position and velocity components of the costate at edge ``i``,
    the only components that enter the control of edge ``i``.
    """
    y = np.asarray(y, dtype=float)
    psi = np.asarray(psi_i, dtype=float)
    if y.shape[0] < 3 or psi.shape[0] != y.shape[0]:
        raise ValueError("need at least three matching samples")
    rows = [i, dfs.m + i]
    qy = np.einsum("rc,ncq->nrq", dfs.Q[i][rows], y)
    at_psi = np.zeros_like(psi)
    at_psi[:, 1] = psi[:, 0]
    dpsi = np.gradient(psi, step, axis=0, edge_order=2)
    dyn = np.sqrt(((dpsi + qy + at_psi) ** 2).sum(axis=(1, 2))).max()
    term = np.linalg.norm(psi[-1] - dfs.QT[i][rows] @ y[-1])
    return float(dyn + term)


def recover_z(dfs: DelayFreeSystem, t, y_at):
    """Delayed edge state from the delay-free one.

    ``z(t) = (I + tA) y(0)`` before the first input arrives and
    ``z(t) = (I + τA) y(t - τ)`` afterwards.  ``y_at`` maps a time array
    to ``(n, 2m, q)`` samples of ``y``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tau = dfs.tau
    if np.any(t < 0) or np.any(t > dfs.edges.horizon * (1 + 1e-12)):
        raise ValueError("time outside [0, T]")
    a = dfs.a_hat
    out = np.empty((t.size,) + dfs.y0.shape)
    early = t < tau
    if early.any():
        drift = np.eye(2 * dfs.m)[None] + t[early, None, None] * a[None]
        out[early] = drift @ dfs.y0
    late = ~early
    if late.any():
        s = np.minimum(t[late] - tau, dfs.horizon)
        out[late] = (np.eye(2 * dfs.m) + tau * a) @ y_at(s)
    return out
