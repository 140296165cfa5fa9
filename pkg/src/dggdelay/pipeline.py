"""End-to-end runs: closed-form solve, matrix-exponential solve, verification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseline_tpbvp import GlobalSolution, solve_global, transition_family
from .closed_form import ClosedFormSolution, build_solution
from .edge_reduction import DelayFreeSystem, EdgeSystem, costate_residual, eliminate_delay, to_edge_system
from .game_model import GameSpec, evaluate_performance
from .reconstruction import SpanningTreeMap, node_controls, reconstruct_nodes, spanning_tree
from .sim_verify import (
    VerificationReport,
    consensus_series,
    nash_perturbation_check,
    node_deviation_diagnostic,
    relative_error,
    simulate_delay_free,
    simulate_delayed,
    uniform_grid,
)
from .spectral import (
    EdgeSpectrum,
    HamiltonianMatrix,
    assemble_M,
    characteristic_quartic,
    edge_eigenvalues,
    eigenvectors,
    verify_jordan_structure,
)

DEFAULT_TOLERANCES = {
    "oracle_equivalence": 1e-6,
    "h_structure": 1e-8,
    "spectral": 1e-9,
    "dynamics_closure": 1e-5,
    "costate": 1e-4,
    "nash": -1e-7,
    "consensus": 0.01,
}


@dataclass(frozen=True)
class Solved:
    spec: GameSpec
    edges: EdgeSystem
    system: DelayFreeSystem
    hamiltonian: HamiltonianMatrix
    spectrum: EdgeSpectrum | None
    solution: ClosedFormSolution | GlobalSolution
    tree: SpanningTreeMap

    def trajectory(self, t_grid, provenance="closed_form"):
        return reconstruct_nodes(self.solution, self.spec, t_grid, self.tree, provenance)

    def controls(self):
        return node_controls(self.solution, self.spec, self.tree)


def solve_closed_form(spec: GameSpec, formula="auto", input_map="shifted", singular_tol=1e-12) -> Solved:
    es = to_edge_system(spec)
    dfs = eliminate_delay(es, input_map)
    h = assemble_M(dfs)
    s = edge_eigenvalues(h)
    sol = build_solution(dfs, s, formula=formula, singular_tol=singular_tol)
    return Solved(spec, es, dfs, h, s, sol, spanning_tree(spec.graph))


def solve_baseline(spec: GameSpec, input_map="shifted", cond_limit=1e12) -> Solved:
    es = to_edge_system(spec)
    dfs = eliminate_delay(es, input_map)
    tf = transition_family(dfs, cond_limit)
    return Solved(spec, es, dfs, tf.hamiltonian, None, solve_global(tf), spanning_tree(spec.graph))


def h_structure(tf, sol: ClosedFormSolution, phi: float):
    """Off-pattern size of ``H(φ)`` and its per-edge mismatch with the closed form, both relative to ``max|H|``."""
    H = tf.H(phi)
    m = tf.m
    mask = np.zeros_like(H, dtype=bool)
    for k in range(m):
        for r in (k, m + k):
            mask[r, [k, m + k]] = True
    scale = np.abs(H).max()
    off = np.abs(H[~mask]).max(initial=0.0) / scale
    blocks = sol.functions.blocks(phi)[0]
    ref = np.array([[[H[k, k], H[k, m + k]], [H[m + k, k], H[m + k, m + k]]] for k in range(m)])
    return float(off), float(np.abs(blocks - ref).max()), float(scale)


def spectral_summary(h: HamiltonianMatrix, s: EdgeSpectrum) -> dict:
    quartic, right, left, norm = [], [], [], []
    unshifted = []
    a = h.mu / h.r_hat
    for i in range(h.m):
        for which in (0, 1):
            for sign in (1, -1):
                lam, v, w = eigenvectors(h, s, i, which, sign)
                quartic.append(abs(characteristic_quartic(lam, a[i], h.kappa)))
                unshifted.append(abs(characteristic_quartic(lam, a[i], h.tau**2 + 1)))
                right.append(np.abs(h.M @ v - lam * v).max())
                left.append(np.abs(w @ h.M - lam * w).max())
                norm.append(abs(w @ v - 1))
    jordan = verify_jordan_structure(h, s)
    return {
        "eigenvalues": [[complex(x).real, complex(x).imag] for x in s.roots.ravel()],
        "quartic_residual": float(max(quartic)),
        "quartic_kappa": float(h.kappa),
        "unshifted_quartic_residual": float(max(unshifted)),
        "right_residual": float(max(right)),
        "left_residual": float(max(left)),
        "normalization_error": float(max(norm)),
        "jordan": jordan.as_dict(),
    }


def verify(spec: GameSpec, seed: int = 0, step: float = 1e-3, n_seeds: int = 5,
           input_map: str = "shifted", diagnostics: bool = True,
           tolerances: dict | None = None) -> VerificationReport:
    """Cross-check the closed form against every independent route."""
    tol = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    rep = VerificationReport(seed=seed)
    cf = solve_closed_form(spec, input_map=input_map)
    sol = cf.solution
    tf = transition_family(cf.system)
    glob = solve_global(tf)
    span = cf.system.horizon

    t100 = np.linspace(0.0, span, 100)
    err = relative_error(sol.y(t100), glob.y(t100), cf.edges.m)
    tl = tol["oracle_equivalence"]
    rep.add("oracle_equivalence", {"max_rel_err": err}, tl, err < tl)

    offs, diffs = [], []
    for phi in (0.5, 2.0, span):
        if phi > span:
            continue
        off, diff, scale = h_structure(tf, sol, phi)
        offs.append(off)
        diffs.append(diff / max(1.0, scale))
    tl = tol["h_structure"]
    rep.add("h_structure", {"off_pattern": max(offs), "block_mismatch": max(diffs)}, tl,
            max(offs) < tl and max(diffs) < tl)

    spec_sum = spectral_summary(cf.hamiltonian, cf.spectrum)
    tl = tol["spectral"]
    ok = (spec_sum["quartic_residual"] < tl and spec_sum["right_residual"] < tl
          and spec_sum["left_residual"] < tl and spec_sum["normalization_error"] < tl
          and spec_sum["jordan"]["passed"])
    rep.add("spectral", spec_sum, tl, ok)

    t, y = simulate_delay_free(cf.system, sol.xi, step)
    e_df = float(np.abs(y - sol.y(t)).max())
    ctrl = cf.controls()
    sim = simulate_delayed(spec, ctrl, step, history=ctrl.history)
    rec = cf.trajectory(sim.times)
    e_node = float(np.abs(sim.states - rec.states).max())
    tl = tol["dynamics_closure"]
    rep.add("dynamics_closure", {"delay_free": e_df, "delayed_nodes": e_node}, tl,
            e_df < tl and e_node < tl)

    psi = sol.psi(t)
    yy = sol.y(t)
    res = max(costate_residual(cf.system, yy, psi[:, k], k, step) for k in range(cf.edges.m))
    tl = tol["costate"]
    rep.add("costate", {"max_residual": res}, tl, res < tl)

    worst, ratios, rows = np.inf, [], []
    for k in range(cf.edges.m):
        for sd in range(seed, seed + n_seeds):
            out = nash_perturbation_check(cf.edges, sol.xi, k, sd, step=step)
            d = dict(out)
            worst = min(worst, min(v for _, v in out))
            for sgn in (1, -1):
                small = d[sgn * 1e-3]
                ratios.append(d[sgn * 1e-2] / small if small > 0 else np.inf)
            rows.append({"edge": k + 1, "agent": int(cf.edges.owners[k]), "seed": sd,
                         "deltas": [[e, v] for e, v in out]})
    ratio_ok = all(50.0 <= r <= 200.0 for r in ratios)
    rep.add("nash", {"min_delta": float(worst), "ratio_range": [float(min(ratios)), float(max(ratios))],
                     "trials": rows}, tol["nash"], worst >= tol["nash"] and ratio_ok)

    series = consensus_series(spec, rec).sum(axis=1)
    frac = float(series[-1] / series[0]) if series[0] > 0 else 0.0
    rep.add("consensus", {"final_over_initial": frac}, tol["consensus"], frac < tol["consensus"])
    rep.consensus = {"initial": float(series[0]), "final": float(series[-1])}
    rep.performance = evaluate_performance(spec, rec).as_dict()
    rep.diagnostics["formula"] = sol.metadata
    if diagnostics:
        rep.diagnostics["node_deviation"] = {
            str(i): node_deviation_diagnostic(spec, ctrl, i, seed, step=step, history=ctrl.history)
            for i in range(1, spec.node_count)
        }
    return rep


def sample_grid(spec: GameSpec, samples: int) -> np.ndarray:
    """``samples`` uniform times over ``[0, T]``; ``T - τ`` must land on the grid for scoring."""
    if samples < 2:
        raise ValueError("need at least two samples")
    return uniform_grid(spec.horizon, spec.horizon / (samples - 1))
