"""Non-distributed reference solution of the edge TPBVP through ``exp(φM)``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .edge_reduction import DelayFreeSystem, recover_z
from .errors import SingularTPBVPError
from .spectral import HamiltonianMatrix, assemble_M

_PADE_ORDER = 6
_PADE = tuple(
    math.factorial(2 * _PADE_ORDER - k) * math.factorial(_PADE_ORDER)
    / (math.factorial(2 * _PADE_ORDER) * math.factorial(k) * math.factorial(_PADE_ORDER - k))
    for k in range(_PADE_ORDER + 1)
)


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal [6/6] Padé approximant.

    The matrix is scaled by ``2^-s`` until its 1-norm is at most 0.5, which
    keeps the truncation error of the approximant near unit roundoff.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max() if n else 0.0
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    x = a / 2.0**s
    ident = np.eye(n)
    # split into even and odd powers: N = U + V, D = U - V
    even = _PADE[0] * ident
    odd = _PADE[1] * x
    power = ident
    x2 = x @ x
    for k in range(2, _PADE_ORDER + 1, 2):
        power = power @ x2
        even = even + _PADE[k] * power
        if k + 1 <= _PADE_ORDER:
            odd = odd + _PADE[k + 1] * (power @ x)
    out = np.linalg.solve(even - odd, even + odd)
    for _ in range(s):
        out = out @ out
    return out


@dataclass(frozen=True)
class TransitionFamily:
    """``H(φ) = [I 0 ... 0] exp(φM) [I; Q_1T; ...; Q_mT]`` and its value at ``T - τ``."""

    hamiltonian: HamiltonianMatrix
    stack: np.ndarray
    H_T: np.ndarray
    condition: float
    _lu: tuple

    @property
    def system(self) -> DelayFreeSystem:
        return self.hamiltonian.system

    @property
    def m(self) -> int:
        return self.hamiltonian.m

    def propagator(self, phi) -> np.ndarray:
        return expm(phi * self.hamiltonian.M)

    def H(self, phi) -> np.ndarray:
        return build_H(self, phi)

    def solve_T(self, rhs) -> np.ndarray:
        return lu_solve(self._lu, rhs)


def _stack(dfs: DelayFreeSystem) -> np.ndarray:
    return np.vstack([np.eye(2 * dfs.m)] + [qt for qt in dfs.QT])


def build_H(tf: TransitionFamily, phi) -> np.ndarray:
    if phi < 0:
        raise ValueError("phi must be nonnegative")
    n = 2 * tf.m
    return tf.propagator(phi)[:n] @ tf.stack


def transition_family(dfs: DelayFreeSystem, cond_limit: float = 1e12) -> TransitionFamily:
    h = assemble_M(dfs)
    stack = _stack(dfs)
    n = 2 * dfs.m
    H_T = expm(dfs.horizon * h.M)[:n] @ stack
    cond = float(np.linalg.cond(H_T))
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularTPBVPError(
            f"ill-conditioned TPBVP: cond H(T - tau) = {cond:.3e} exceeds {cond_limit:.0e}"
        )
    return TransitionFamily(h, stack, H_T, cond, lu_factor(H_T))


@dataclass(frozen=True)
class GlobalSolution:
    """Trajectory ``y(t) = H(T-τ-t) H(T-τ)^{-1} y0`` and its costates.

    Every evaluation uses the full initial edge state; this is the
    centralized reference the distributed solution is checked against.
    """

    family: TransitionFamily
    y0: np.ndarray
    coef: np.ndarray

    @property
    def system(self) -> DelayFreeSystem:
        return self.family.system

    def _check(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        span = self.system.horizon
        if np.any(t < 0) or np.any(t > span * (1 + 1e-12)):
            raise ValueError(f"time outside [0, T - tau] = [0, {span}]")
        return np.minimum(t, span)

    def augmented(self, t) -> np.ndarray:
        """``[y; ψ_1; ...; ψ_m](t)``, shape ``(n, 2m(m+1), q)``."""
        t = self._check(t)
        phis = self.system.horizon - t
        full = self.family.stack @ self.coef
        return np.array([self.family.propagator(p) @ full for p in phis])

    def y(self, t) -> np.ndarray:
        return self.augmented(t)[:, : 2 * self.family.m]

    def psi(self, t) -> np.ndarray:
        """Costates, shape ``(n, m, 2m, q)``."""
        aug = self.augmented(t)
        m = self.family.m
        return aug[:, 2 * m:].reshape(aug.shape[0], m, 2 * m, -1)

    def y_dot(self, t) -> np.ndarray:
        aug = self.augmented(t)
        # dy/dt = -dy/dphi
        return -(self.family.hamiltonian.M @ aug)[:, : 2 * self.family.m]

    def xi(self, t) -> np.ndarray:
        """Edge controls, shape ``(n, m, q)``: velocity rows of ``dy/dt``."""
        m = self.family.m
        return self.y_dot(t)[:, m:]

    def z(self, t) -> np.ndarray:
        return recover_z(self.system, t, self.y)


def solve_global(tf: TransitionFamily, y0=None) -> GlobalSolution:
    y0 = tf.system.y0 if y0 is None else np.asarray(y0, dtype=float)
    n = 2 * tf.m
    if y0.ndim == 1:
        y0 = y0.reshape(n, -1)
    if y0.shape[0] != n:
        raise ValueError(f"y0 must have {n} rows")
    return GlobalSolution(tf, y0, tf.solve_T(y0))
