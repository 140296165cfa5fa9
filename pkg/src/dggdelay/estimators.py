"""scikit-learn style facades over the solvers.

``fit`` takes a :class:`GameSpec` instead of a design matrix; ``predict``
takes sample times and returns stacked node states ``(n, 2(N+1), q)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .game_model import GameSpec
from .pipeline import solve_baseline, solve_closed_form
from .reconstruction import node_states


def _times(est, t):
    t = check_array(np.atleast_1d(t), ensure_2d=False, dtype=float)
    if t.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if np.any(t < 0) or np.any(t > est.spec_.horizon):
        raise ValueError(f"times must lie in [0, {est.spec_.horizon}]")
    return t


class _NashBase(BaseEstimator):
    def _solve(self, spec):
        raise NotImplementedError

    def fit(self, spec: GameSpec, y=None):
        if not isinstance(spec, GameSpec):
            raise TypeError("fit expects a GameSpec")
        self.solved_ = self._solve(spec)
        self.spec_ = spec
        self.n_edges_ = spec.graph.m
        return self

    def predict(self, t) -> np.ndarray:
        check_is_fitted(self, "solved_")
        return node_states(self.solved_.solution, self.spec_, _times(self, t), self.solved_.tree)

    def predict_edges(self, t) -> np.ndarray:
        """Delayed edge states ``z(t)``, shape ``(n, 2m, q)``."""
        check_is_fitted(self, "solved_")
        return self.solved_.solution.z(_times(self, t))

    def predict_controls(self, t) -> np.ndarray:
        """Node commands issued at ``t`` in ``[0, T - τ]``, shape ``(n, N+1, q)``."""
        check_is_fitted(self, "solved_")
        t = _times(self, t)
        if np.any(t > self.spec_.horizon - self.spec_.tau):
            raise ValueError("commands exist only on [0, T - tau]")
        return self.solved_.controls()(t)


class ClosedFormNash(_NashBase):
    """Distributed closed-form equilibrium (one 2x2 transition per edge)."""

    def __init__(self, formula="auto", input_map="shifted", singular_tol=1e-12):
        self.formula = formula
        self.input_map = input_map
        self.singular_tol = singular_tol

    def _solve(self, spec):
        out = solve_closed_form(spec, self.formula, self.input_map, self.singular_tol)
        self.metadata_ = out.solution.metadata
        return out


class MatrixExponentialTPBVP(_NashBase):
    """Centralized reference solution through ``exp(φM)``."""

    def __init__(self, input_map="shifted", cond_limit=1e12):
        self.input_map = input_map
        self.cond_limit = cond_limit

    def _solve(self, spec):
        out = solve_baseline(spec, self.input_map, self.cond_limit)
        self.condition_ = out.solution.family.condition
        return out
