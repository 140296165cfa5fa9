"""Command-line interface.

Subcommands: solve, baseline, verify, spectral, example-paper.
Exit codes: 0 ok, 1 configuration error, 2 singular or ill-conditioned
TPBVP, 3 verification failure (the report is still written).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, bundled_example, load_config
from .errors import ConfigError, SingularTPBVPError
from .game_model import evaluate_performance
from .io import write_json, write_trajectory_csv
from .pipeline import sample_grid, solve_baseline, solve_closed_form, spectral_summary, verify
from .sim_verify import consensus_series

EXAMPLE_DELAYS = (0.0, 0.5)


def _scenario_dict(spec, samples):
    return {
        "nodes": spec.node_count,
        "edges": [list(e) for e in spec.graph.edges],
        "q": spec.q,
        "tau": spec.tau,
        "horizon": spec.horizon,
        "samples": samples,
    }


def _edge_table(solved):
    es = solved.edges
    rows = []
    for k, (a, b) in enumerate(solved.spec.graph.edges):
        row = {"edge": k + 1, "tail": a, "head": b, "owner": int(es.owners[k]),
               "mu": float(es.mu[k]), "omega": float(es.omega[k]), "r": float(es.r_hat[k])}
        if solved.spectrum is not None:
            lam = complex(solved.spectrum.lambdas[k])
            par = complex(solved.spectrum.partners[k])
            row["lambda"] = [lam.real, lam.imag]
            row["partner"] = [par.real, par.imag]
            row["delta"] = float(solved.solution.delta[k])
        rows.append(row)
    return rows


def _run_solution(solved, samples, out_dir: Path, stem: str, provenance: str):
    spec = solved.spec
    grid = sample_grid(spec, samples)
    traj = solved.trajectory(grid, provenance)
    try:
        perf = evaluate_performance(spec, traj)
    except ValueError as exc:
        raise ConfigError(f"output.samples: {exc}") from None
    series = consensus_series(spec, traj).sum(axis=1)
    write_trajectory_csv(out_dir / f"{stem}.csv", traj)
    meta = {
        "provenance": provenance,
        "scenario": _scenario_dict(spec, samples),
        "edges": _edge_table(solved),
        "performance": perf.as_dict(),
        "quadrature": {"step": perf.step, "trapezoid_tail": perf.trapezoid_tail},
        "consensus": {
            "initial": float(series[0]),
            "final": float(series[-1]),
            "final_over_initial": float(series[-1] / series[0]) if series[0] > 0 else 0.0,
        },
    }
    if provenance == "closed_form":
        meta["formula"] = solved.solution.metadata
    else:
        meta["condition_H_T"] = float(np.linalg.cond(solved.solution.family.H_T))
    return meta


def _spec(cfg: ScenarioConfig, tau):
    return cfg.to_spec(tau)


def cmd_solve(cfg, args, out):
    spec = _spec(cfg, args.tau)
    meta = _run_solution(solve_closed_form(spec), args.samples or cfg.samples, out, "trajectory", "closed_form")
    write_json(out / "solution.json", meta)
    return 0


def cmd_baseline(cfg, args, out):
    spec = _spec(cfg, args.tau)
    meta = _run_solution(solve_baseline(spec), args.samples or cfg.samples, out, "trajectory", "baseline")
    write_json(out / "solution.json", meta)
    return 0


def cmd_verify(cfg, args, out):
    spec = _spec(cfg, args.tau)
    seed = cfg.seed if args.seed is None else args.seed
    step = cfg.step if args.step is None else args.step
    rep = verify(spec, seed=seed, step=step, tolerances=cfg.tolerances)
    payload = rep.as_dict()
    payload["scenario"] = _scenario_dict(spec, args.samples or cfg.samples)
    write_json(out / "report.json", payload)
    for name, c in rep.checks.items():
        print(f"{name}: {'pass' if c['passed'] else 'FAIL'}")
    return 0 if rep.passed else 3


def cmd_spectral(cfg, args, out):
    spec = _spec(cfg, args.tau)
    solved = solve_closed_form(spec)
    payload = spectral_summary(solved.hamiltonian, solved.spectrum)
    payload["edges"] = _edge_table(solved)
    payload["scenario"] = _scenario_dict(spec, args.samples or cfg.samples)
    write_json(out / "spectral.json", payload)
    return 0 if payload["jordan"]["passed"] else 3


def cmd_example(cfg, args, out):
    cfg = bundled_example()
    samples = args.samples or cfg.samples
    summary = {}
    for tau in EXAMPLE_DELAYS:
        spec = cfg.to_spec(tau)
        sub = out / f"tau_{tau:g}"
        sub.mkdir(parents=True, exist_ok=True)
        meta = _run_solution(solve_closed_form(spec), samples, sub, "trajectory", "closed_form")
        base = _run_solution(solve_baseline(spec), samples, sub, "baseline", "baseline")
        meta["baseline"] = {"performance": base["performance"], "consensus": base["consensus"]}
        write_json(sub / "solution.json", meta)
        summary[f"{tau:g}"] = meta["consensus"]
    write_json(out / "summary.json", {"delays": list(EXAMPLE_DELAYS), "consensus": summary})
    return 0


COMMANDS = {
    "solve": (cmd_solve, "closed-form distributed solution: trajectory.csv + solution.json"),
    "baseline": (cmd_baseline, "matrix-exponential TPBVP solution: trajectory.csv + solution.json"),
    "verify": (cmd_verify, "cross-checks and deviation tests: report.json"),
    "spectral": (cmd_spectral, "eigenvalues, eigenvector residuals, null dimensions: spectral.json"),
    "example-paper": (cmd_example, "bundled four-agent scenario at tau = 0 and 0.5"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dggdelay", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", type=Path, required=name != "example-paper",
                       help="scenario YAML file")
        s.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
        s.add_argument("--tau", type=float, default=None, help="override the delay")
        s.add_argument("--samples", type=int, default=None, help="output samples over [0, T]")
        s.add_argument("--seed", type=int, default=None, help="seed for perturbation tests")
        s.add_argument("--step", type=float, default=None, help="simulation step in seconds")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        if args.samples is not None and args.samples < 2:
            raise ConfigError("--samples: need at least 2")
        cfg = load_config(args.config) if args.config else None
        args.out_dir.mkdir(parents=True, exist_ok=True)
        return func(cfg, args, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SingularTPBVPError as exc:
        print(f"singular TPBVP: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
