"""Closed-form open-loop Nash equilibria of leader-follower graphical games
with input-delayed double-integrator agents."""
from .baseline_tpbvp import expm, solve_global, transition_family
from .closed_form import build_solution, eval_xi, eval_y, eval_z
from .config import bundled_example, load_config
from .edge_reduction import costate_residual, eliminate_delay, to_edge_system
from .errors import ConfigError, SingularTPBVPError
from .estimators import ClosedFormNash, MatrixExponentialTPBVP
from .game_model import BasisTerm, GameSpec, LeaderTrajectory, consensus_error, evaluate_performance
from .graph_model import DirectedGraph, EdgeWeights, distributed_laplacian, incidence_matrix, kron
from .pipeline import solve_baseline, solve_closed_form, verify
from .reconstruction import cycle_consistency, reconstruct_nodes, spanning_tree
from .sim_verify import consensus_series, nash_perturbation_check, simulate_delayed
from .spectral import assemble_M, edge_eigenvalues, eigenvectors, verify_jordan_structure

__version__ = "0.1.0"
