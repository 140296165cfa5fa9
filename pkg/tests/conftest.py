import numpy as np
import pytest

from dggdelay.config import bundled_example
from dggdelay.game_model import BasisTerm, GameSpec, LeaderTrajectory
from dggdelay.graph_model import DirectedGraph, EdgeWeights
from dggdelay.pipeline import solve_baseline, solve_closed_form

ACCEPTANCE_LINES: list[str] = []


def example_spec(tau=0.5, horizon=8.0):
    """Four-node leader-follower scenario, built by hand (not via YAML)."""
    g = DirectedGraph(4, [(0, 1), (1, 2), (1, 3)])
    running = np.array([[0, 0, 0], [1, 0.7, 0.5], [0, 0.7, 0], [0, 0, 0.5]], float)
    terminal = np.array([[0, 0, 0], [1, 1, 1], [0, 1, 0], [0, 0, 1]], float)
    w = EdgeWeights(running, terminal, np.array([0, 1, 1, 1.0]))
    lead = LeaderTrajectory(2, (BasisTerm(0, "cos", 1.0, 1.0), BasisTerm(1, "poly", 1.0, 1)))
    p = np.array([[1, 0], [-1, 1], [4, 4], [6, 9.0]])
    v = np.array([[0, 1], [0, 2], [0, 0], [2, 0.0]])
    return GameSpec(g, w, 2, tau, horizon, p, v, lead)


def single_edge_spec(tau=0.0, horizon=8.0, mu=1.0, r=1.0, omega=1.0, p1=(1.0,), v1=(0.0,)):
    g = DirectedGraph(2, [(0, 1)])
    w = EdgeWeights(np.array([[0.0], [mu]]), np.array([[0.0], [omega]]), np.array([0.0, r]))
    lead = LeaderTrajectory(1, ())
    return GameSpec(g, w, 1, tau, horizon, np.array([[0.0], list(p1)]), np.array([[0.0], list(v1)]), lead)


@pytest.fixture(scope="session")
def spec_for():
    cache = {}

    def get(tau):
        if tau not in cache:
            cache[tau] = example_spec(tau)
        return cache[tau]
    return get


@pytest.fixture(scope="session")
def solved_for(spec_for):
    cache = {}

    def get(tau, kind="closed_form"):
        key = (tau, kind)
        if key not in cache:
            fn = solve_closed_form if kind == "closed_form" else solve_baseline
            cache[key] = fn(spec_for(tau))
        return cache[key]
    return get


@pytest.fixture(scope="session")
def bundled():
    return bundled_example()


@pytest.fixture
def acceptance_log():
    def log(line):
        print(line)
        ACCEPTANCE_LINES.append(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
