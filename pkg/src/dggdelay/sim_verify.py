"""Brute-force checks: RK4 simulation of delayed and delay-free dynamics,
unilateral-deviation tests and consensus metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edge_reduction import DelayFreeSystem, EdgeSystem
from .game_model import GameSpec, consensus_error, simpson

PROVENANCES = ("closed_form", "baseline", "simulated")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled node trajectory.

    ``positions``, ``velocities`` and ``controls`` have shape
    ``(count, N+1, q)``.  ``controls[n]`` is the command issued at
    ``times[n]``; it reaches the plant ``τ`` later and is NaN past ``T - τ``.
    """

    times: np.ndarray
    step: float
    positions: np.ndarray
    velocities: np.ndarray
    controls: np.ndarray
    provenance: str = "simulated"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")
        n = len(self.times)
        for name in ("positions", "velocities", "controls"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} sample count differs from the time grid")

    @property
    def states(self) -> np.ndarray:
        return np.concatenate([self.positions, self.velocities], axis=1)


def uniform_grid(t_end: float, step: float, t0: float = 0.0) -> np.ndarray:
    if not step > 0:
        raise ValueError("step must be positive")
    count = int(round((t_end - t0) / step))
    if count < 1 or abs(count * step - (t_end - t0)) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"span {t_end - t0} is not a multiple of step {step}")
    return t0 + step * np.arange(count + 1)


def rk4_linear(a, x0, forcing, t0: float, step: float, count: int) -> np.ndarray:
    """Classic RK4 for ``x' = a x + f(t)``; ``x0`` is ``(dim, ...)``.

    ``forcing(ts, side)`` is evaluated once, vectorized, at the step starts
    (``side=+1``), midpoints (``0``) and step ends (``-1``).  The side lets a
    forcing with a jump on a grid node return the right limit at the start
    of a step and the left limit at its end.  Returns ``(count + 1, *x0.shape)``.
    """
    x0 = np.asarray(x0, dtype=float)
    shape = x0.shape
    x = x0.reshape(shape[0], -1)
    idx = np.arange(count)
    h = step

    def ev(ts, side):
        return np.asarray(forcing(ts, side), dtype=float).reshape(count, shape[0], -1)

    f_start = ev(t0 + h * idx, 1)
    f_mid = ev(t0 + h * (idx + 0.5), 0)
    f_end = ev(t0 + h * (idx + 1), -1)
    out = np.empty((count + 1,) + x.shape)
    out[0] = x
    # overflow is reported below with the failing time
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(count):
            fm = f_mid[n]
            k1 = a @ x + f_start[n]
            k2 = a @ (x + 0.5 * h * k1) + fm
            k3 = a @ (x + 0.5 * h * k2) + fm
            k4 = a @ (x + h * k3) + f_end[n]
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise FloatingPointError(f"state diverged at t = {t0 + (n + 1) * h:.6g}")
            out[n + 1] = x
    return out.reshape((count + 1,) + shape)


def _delayed_time(ts, tau, step, side):
    """``s = t - τ`` with grid-level roundoff removed and a live mask.

    At ``s == 0`` the input is live only when approached from the right.
    """
    s = ts - tau
    s[np.abs(s) < 1e-9 * step] = 0.0
    live = s > 0 if side < 0 else s >= 0
    return s, live


def _double_integrator(n):
    a = np.zeros((2 * n, 2 * n))
    a[:n, n:] = np.eye(n)
    return a


def simulate_delayed(spec: GameSpec, controls, step: float = 1e-3, history=None) -> Trajectory:
    """RK4 of the node dynamics with every input delayed by ``τ``.

    ``controls`` maps a time array ``s`` in ``[0, T-τ]`` to commands
    ``(len(s), N+1, q)``.  ``history`` gives the commands for ``s < 0``;
    by default they are zero.  Stage inputs are evaluated exactly at
    ``t - τ``.
    """
    n = spec.node_count
    t = uniform_grid(spec.horizon, step)
    tau = spec.tau
    span = spec.horizon - tau

    def forcing(ts, side):
        f = np.zeros((ts.size, 2 * n, spec.q))
        s, live = _delayed_time(ts, tau, step, side)
        if live.any():
            f[live, n:] = controls(np.minimum(s[live], span))
        if history is not None and (~live).any():
            f[~live, n:] = history(np.minimum(s[~live], 0.0))
        return f

    x = rk4_linear(_double_integrator(n), spec.x0, forcing, 0.0, step, t.size - 1)
    u = np.full((t.size, n, spec.q), np.nan)
    live = t <= span * (1 + 1e-12)
    u[live] = controls(np.minimum(t[live], span))
    return Trajectory(t, step, x[:, :n], x[:, n:], u, "simulated")


def simulate_delay_free(dfs: DelayFreeSystem, xi_at, step: float = 1e-3, y0=None):
    """RK4 of ``y' = A y + Σ_k B_k0 ξ_k`` on ``[0, T - τ]``; returns ``(t, y)``."""
    t = uniform_grid(dfs.horizon, step)
    y0 = dfs.y0 if y0 is None else y0

    def forcing(ts, side):
        return np.einsum("kr,nkq->nrq", dfs.B0, xi_at(np.minimum(ts, dfs.horizon)))

    return t, rk4_linear(dfs.a_hat, y0, forcing, 0.0, step, t.size - 1)


def simulate_delayed_edges(es: EdgeSystem, xi_at, step: float = 1e-3, batch: int | None = None):
    """RK4 of ``z' = A z + Σ_k B_k ξ_k(t - τ)`` on ``[0, T]``, ``ξ(s) = 0`` for ``s < 0``.

    ``xi_at`` returns ``(n, m, q)`` or, with ``batch``, ``(n, m, q, batch)``
    for several control profiles integrated side by side.
    """
    t = uniform_grid(es.horizon, step)
    span = es.horizon - es.tau
    m = es.m
    b = np.vstack([np.zeros((m, m)), np.eye(m)])

    def forcing(ts, side):
        s, live = _delayed_time(ts, es.tau, step, side)
        shape = (ts.size, m, es.q) + ((batch,) if batch else ())
        xi = np.zeros(shape)
        if live.any():
            xi[live] = xi_at(np.minimum(s[live], span))
        return np.einsum("rk,nk...->nr...", b, xi)

    z0 = es.z0 if not batch else np.repeat(es.z0[..., None], batch, axis=-1)
    return t, rk4_linear(es.a_hat, z0, forcing, 0.0, step, t.size - 1)


def edge_cost(es: EdgeSystem, k: int, t, z, xi, step: float) -> np.ndarray:
    """Cost of edge problem ``k`` from samples on a uniform grid over ``[0, T]``.

    ``z`` is ``(n, 2m, q, ...)`` and ``xi`` the samples of ``ξ_k`` on the same
    grid, ``(n, q, ...)``; only ``s <= T - τ`` enters the control term.
    """
    w = np.concatenate([es.running[k], es.running[k]])
    wt = np.concatenate([es.terminal[k], es.terminal[k]])
    run = np.einsum("r,nr...->n...", w, (z**2).sum(axis=2))
    state, _ = simpson(run, step)
    terminal = np.einsum("r,r...->...", wt, (z[-1] ** 2).sum(axis=1))
    j = int(round((es.horizon - es.tau) / step))
    if j == 0:
        control = np.zeros_like(terminal)
    else:
        control, _ = simpson((xi[: j + 1] ** 2).sum(axis=1), step)
    return terminal + state + es.r_hat[k] * control


def cosine_bump(seed: int, span: float, q: int):
    """Seeded C¹ bump ``½(1 - cos(2π(s-a)/(b-a)))`` on a random ``[a, b] ⊂ [0, span]`` times a unit direction."""
    rng = np.random.default_rng(seed)
    width = rng.uniform(0.2, 0.6) * span
    a = rng.uniform(0.0, span - width)
    b = a + width
    d = rng.normal(size=q)
    d /= np.linalg.norm(d)

    def bump(s):
        s = np.asarray(s, dtype=float)
        inside = (s >= a) & (s <= b)
        v = np.where(inside, 0.5 * (1 - np.cos(2 * np.pi * (s - a) / width)), 0.0)
        return v[..., None] * d

    bump.interval = (a, b)
    bump.direction = d
    return bump


DEFAULT_EPS = (1e-2, -1e-2, 1e-3, -1e-3)


def nash_perturbation_check(es: EdgeSystem, xi_at, k: int, seed: int, eps=DEFAULT_EPS,
                            step: float = 1e-3):
    """Unilateral deviation of edge problem ``k``: ``ξ_k += ε·bump``.

    All other edge controls stay at the candidate equilibrium.  The delayed
    edge dynamics are re-integrated and the problem's own cost compared.
    Returns a list of ``(ε, ΔJ)``.
    """
    eps = np.asarray(eps, dtype=float)
    span = es.horizon - es.tau
    bump = cosine_bump(seed, span, es.q)
    levels = np.concatenate([[0.0], eps])
    nb = levels.size

    def xi_batch(s):
        xi = np.repeat(xi_at(s)[..., None], nb, axis=-1)
        xi[:, k] += bump(s)[..., None] * levels
        return xi

    t, z = simulate_delayed_edges(es, xi_batch, step, batch=nb)
    s = np.minimum(t, span)
    xi_k = xi_batch(s)[:, k]
    j = edge_cost(es, k, t, z, xi_k, step)
    return [(float(e), float(j[i + 1] - j[0])) for i, e in enumerate(eps)]


def node_deviation_diagnostic(spec: GameSpec, controls, agent: int, seed: int,
                              eps=DEFAULT_EPS, step: float = 1e-3, history=None) -> dict:
    """Perturb only agent ``agent``'s own command and re-score its node cost.

    Informational: in the node game a unilateral change of ``u_i`` moves
    every edge incident to ``i``, which is a different deviation from the
    one the edge problems optimize against.
    """
    from .game_model import evaluate_performance

    span = spec.horizon - spec.tau
    bump = cosine_bump(seed, span, spec.q)
    base = evaluate_performance(spec, simulate_delayed(spec, controls, step, history)).total[agent]
    out = []
    for e in eps:
        def pert(s, e=e):
            u = controls(s)
            u[:, agent] += e * bump(s)
            return u
        j = evaluate_performance(spec, simulate_delayed(spec, pert, step, history)).total[agent]
        out.append((float(e), float(j - base)))
    d = dict(out)
    slope = None
    if 1e-3 in d and -1e-3 in d:
        slope = (d[1e-3] - d[-1e-3]) / 2e-3
    return {"deltas": out, "first_order_slope": slope}


def consensus_series(spec: GameSpec, traj: Trajectory) -> np.ndarray:
    """Per-node consensus error at every sample, ``(count, N+1)``."""
    return consensus_error(spec, traj.states)


def relative_error(a, b, edges: int) -> float:
    """Worst per-edge normwise relative error between edge trajectories ``(n, 2m, q)``."""
    a, b = np.asarray(a), np.asarray(b)
    worst = 0.0
    for k in range(edges):
        rows = [k, edges + k]
        ref = np.abs(b[:, rows]).max()
        err = np.abs(a[:, rows] - b[:, rows]).max()
        worst = max(worst, err / ref if ref > 0 else err)
    return float(worst)


@dataclass
class VerificationReport:
    checks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    performance: dict = field(default_factory=dict)
    consensus: dict = field(default_factory=dict)
    seed: int = 0

    def add(self, name, value, tol, passed, **extra):
        self.checks[name] = {"value": value, "tol": tol, "passed": bool(passed), **extra}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "seed": self.seed,
            "checks": self.checks,
            "diagnostics": self.diagnostics,
            "performance": self.performance,
            "consensus": self.consensus,
        }
