"""Hamiltonian matrix of the edge TPBVP, its per-edge quartic spectrum,
closed-form eigenvectors and Jordan-structure checks.

Every edge contributes the four nonzero eigenvalues ``±λa, ±λb`` where
``λa² , λb²`` are the roots ``s±`` of ``s² - aκ s + a = 0`` with
``a = μ/r``.  ``κ`` is 1 for the shifted input map (any delay) and
``τ² + 1`` for the unshifted one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edge_reduction import DelayFreeSystem


@dataclass(frozen=True)
class HamiltonianMatrix:
    """``M`` in the q-factored space of size ``2m(m+1)``.

    Block row 0 is ``[-A, S_1, ..., S_m]``; block row ``k`` is
    ``[Q_k, 0, ..., A^T, ..., 0]`` with ``A^T`` in column block ``k``.
    """

    M: np.ndarray
    system: DelayFreeSystem

    @property
    def m(self) -> int:
        return self.system.m

    @property
    def tau(self) -> float:
        return self.system.tau

    @property
    def mu(self) -> np.ndarray:
        return self.system.edges.mu

    @property
    def omega(self) -> np.ndarray:
        return self.system.edges.omega

    @property
    def r_hat(self) -> np.ndarray:
        return self.system.edges.r_hat

    @property
    def kappa(self) -> float:
        """Middle coefficient factor of the quartic actually satisfied by M."""
        return 1.0 if self.system.input_map == "shifted" or self.tau == 0 else self.tau**2 + 1


def assemble_M(dfs: DelayFreeSystem) -> HamiltonianMatrix:
    m = dfs.m
    n = 2 * m
    a = dfs.a_hat
    M = np.zeros((n * (m + 1), n * (m + 1)))
    M[:n, :n] = -a
    for k in range(m):
        blk = slice(n * (k + 1), n * (k + 2))
        M[:n, blk] = dfs.S[k]
        M[blk, :n] = dfs.Q[k]
        M[blk, blk] = a.T
    return HamiltonianMatrix(M, dfs)


def characteristic_quartic(lam, a, kappa):
    """``λ⁴ - aκλ² + a``; vectorized."""
    lam = np.asarray(lam)
    return lam**4 - a * kappa * lam**2 + a


def characteristic_polynomial(h: HamiltonianMatrix, lam, kappa=None):
    """Predicted ``det(M - λI)``: ``λ^{2m(m-1)} Π_k quartic_k(λ)``.

    ``kappa`` defaults to the value matching ``h``; pass ``τ² + 1`` to
    evaluate the unshifted form regardless of the input map.
    """
    kappa = h.kappa if kappa is None else kappa
    a = h.mu / h.r_hat
    out = lam ** (2 * h.m * (h.m - 1))
    for ak in a:
        out = out * characteristic_quartic(lam, ak, kappa)
    return out


@dataclass(frozen=True)
class EdgeSpectrum:
    """Per-edge quartic roots and the normalizations used by the closed form.

    ``lambdas[k]`` is the principal root ``sqrt(s+)`` and ``partners[k]`` is
    ``sqrt(s-)``.  For complex ``s±`` the two are conjugates of each other.
    ``tau_e`` / ``kappa_e`` describe the base frame in which the closed form
    is written: ``0 / 1`` for the shifted map, ``τ / τ²+1`` otherwise.
    """

    a: np.ndarray
    b: np.ndarray
    r_hat: np.ndarray
    mu: np.ndarray
    lambdas: np.ndarray
    partners: np.ndarray
    kappa: float
    tau_e: float
    frame_tau: float

    @property
    def kappa_e(self) -> float:
        return self.tau_e**2 + 1

    @property
    def roots(self) -> np.ndarray:
        """``(m, 2)`` array ``[λa, λb]``."""
        return np.stack([self.lambdas, self.partners], axis=1)

    def varpi_sq(self, lam=None) -> np.ndarray:
        """``ϖ²(λ) = ½ λ³ / (a - λ⁴)``; odd in ``λ``."""
        lam = self.roots if lam is None else np.asarray(lam)
        a = self.a.reshape((-1,) + (1,) * (lam.ndim - 1))
        return 0.5 * lam**3 / (a - lam**4)

    def all_eigenvalues(self) -> np.ndarray:
        r = self.roots
        return np.concatenate([r, -r], axis=1)

    def confluence(self) -> np.ndarray:
        """``|s+ - s-| / |s+|``; zero when the quartic has a repeated pair."""
        return np.abs(self.lambdas**2 - self.partners**2) / np.abs(self.lambdas**2)


def edge_eigenvalues(h: HamiltonianMatrix) -> EdgeSpectrum:
    mu, r = h.mu, h.r_hat
    if np.any(~(mu > 0)):
        bad = np.flatnonzero(~(mu > 0)) + 1
        raise ValueError(f"edge weight mu must be positive; degenerate edges {list(bad)}")
    a = mu / r
    b = h.omega / r
    kappa = h.kappa
    disc = np.sqrt((a * kappa) ** 2 - 4 * a + 0j)
    s_plus = 0.5 * (a * kappa + disc)
    s_minus = 0.5 * (a * kappa - disc)
    # principal branch: Re >= 0
    lam_a = np.sqrt(s_plus)
    lam_b = np.sqrt(s_minus)
    shifted = h.system.input_map == "shifted"
    tau_e = 0.0 if shifted else h.tau
    frame_tau = h.tau if shifted else 0.0
    return EdgeSpectrum(a, b, r.copy(), mu.copy(), lam_a, lam_b, kappa, tau_e, frame_tau)


def _local_vectors(lam, mu, r, tau_e):
    """Right/left eigenvectors of the 4x4 edge block in the base frame.

    Layout ``[y_pos, y_vel, psi_pos, psi_vel]``; normalized so ``w v = 1``.
    """
    kappa = tau_e**2 + 1
    v = np.array([1.0, -lam, mu * (1 / lam - tau_e), mu * (1 / lam**2 - kappa)], dtype=complex)
    w = np.array([mu * (1 + tau_e * lam) / lam, r * lam**2, 1.0, lam], dtype=complex)
    a = mu / r
    varpi_sq = 0.5 * lam**3 / (a - lam**4)
    return v, w * varpi_sq / (r * lam**2)


def eigenvectors(h: HamiltonianMatrix, s: EdgeSpectrum, i: int, which: int = 0, sign: int = 1):
    """Closed-form right/left eigenvectors of ``M`` for one of edge ``i``'s roots.

    ``which`` selects ``λa`` (0) or ``λb`` (1); ``sign=-1`` negates it.
    Returns ``(lam, v, w)`` with ``w @ v == 1``.
    """
    lam = sign * s.roots[i, which]
    if abs(lam) < 1e-12:
        raise ValueError("eigenvalue is numerically zero")
    if s.confluence()[i] < 1e-8:
        raise ValueError(f"edge {i + 1} has a repeated quartic root; eigenvectors are not simple")
    m = h.m
    n = 2 * m
    sys = h.system
    mu, r = s.mu[i], s.r_hat[i]
    v4, w4 = _local_vectors(lam, mu, r, s.tau_e)
    v = np.zeros(n * (m + 1), dtype=complex)
    w = np.zeros(n * (m + 1), dtype=complex)
    slot = [i, m + i]
    v[slot] = v4[:2]
    w[slot] = w4[:2]
    running = sys.edges.running
    for j in range(m):
        scale = running[j, i] / mu
        rows = [n * (j + 1) + i, n * (j + 1) + m + i]
        v[rows] = scale * v4[2:]
        if j == i:
            w[rows] = w4[2:]
    if s.frame_tau:
        # similarity back from the base frame: v <- P v, w <- w P^{-1},
        # P = diag(T^{-1}, T^T, ..., T^T) with T = I + τA
        a = sys.a_hat
        t_inv = np.eye(n) - s.frame_tau * a
        t_fwd = np.eye(n) + s.frame_tau * a
        v[:n] = t_inv @ v[:n]
        w[:n] = w[:n] @ t_fwd
        for j in range(m):
            blk = slice(n * (j + 1), n * (j + 2))
            v[blk] = t_fwd.T @ v[blk]
            w[blk] = w[blk] @ t_inv.T
    return lam, v, w


@dataclass(frozen=True)
class JordanReport:
    null_dims: tuple[int, int, int]
    expected: tuple[int, int, int]
    gaps: tuple[float, float, float]
    min_separation: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "null_dims": list(self.null_dims),
            "expected": list(self.expected),
            "singular_value_gaps": [float(g) for g in self.gaps],
            "min_nonzero_eigenvalue_separation": float(self.min_separation),
            "passed": bool(self.passed),
        }


def _nullity(a, rel=1e-8):
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0:
        return a.shape[0], np.inf
    keep = sv > rel * sv[0]
    rank = int(keep.sum())
    if rank == len(sv):
        return 0, np.inf
    smallest_kept = sv[rank - 1] if rank else sv[0]
    largest_dropped = sv[rank]
    gap = np.inf if largest_dropped == 0 else smallest_kept / largest_dropped
    return len(sv) - rank, gap


def verify_jordan_structure(h: HamiltonianMatrix, spectrum: EdgeSpectrum | None = None) -> JordanReport:
    """Null dimensions of ``M, M², M³`` and simplicity of the nonzero spectrum.

    Ranks use a singular-value threshold of ``1e-8 σ_max``; a decision is
    accepted only if the gap across the threshold is at least ``1e3``.
    """
    m = h.m
    mats = [h.M, h.M @ h.M]
    mats.append(mats[1] @ h.M)
    dims, gaps = zip(*(_nullity(x) for x in mats))
    expected = (m * (m - 1), 2 * m * (m - 1), 2 * m * (m - 1))
    spectrum = spectrum or edge_eigenvalues(h)
    eig = spectrum.all_eigenvalues().ravel()
    diff = np.abs(eig[:, None] - eig[None, :]) + np.diag(np.full(eig.size, np.inf))
    sep = float(diff.min()) if eig.size > 1 else np.inf
    scale = float(np.abs(eig).max())
    ok = tuple(dims) == expected and min(gaps) >= 1e3 and sep > 1e-8 * scale
    return JordanReport(tuple(int(d) for d in dims), expected, tuple(float(g) for g in gaps), sep, bool(ok))
