import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import example_spec, single_edge_spec
from dggdelay.baseline_tpbvp import build_H, expm, solve_global, transition_family
from dggdelay.edge_reduction import eliminate_delay, to_edge_system
from dggdelay.errors import SingularTPBVPError
from oracles import pontryagin_shooting


def test_expm_zero():
    np.testing.assert_array_equal(expm(np.zeros((5, 5))), np.eye(5))


def test_expm_nilpotent():
    a = np.kron([[0.0, 1.0], [0.0, 0.0]], np.eye(3))
    for s in (0.3, 2.0, 17.0):
        np.testing.assert_allclose(expm(s * a), np.eye(6) + s * a, atol=1e-13)


def test_expm_rotation():
    np.testing.assert_allclose(expm(np.pi * np.array([[0.0, 1.0], [-1.0, 0.0]])), -np.eye(2), atol=1e-12)


def test_expm_rejects_non_square():
    with pytest.raises(ValueError):
        expm(np.zeros((2, 3)))


def _random(seed, n, norm):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return a * norm / max(np.linalg.norm(a, 1), 1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), norm=st.floats(1e-3, 1.0), n=st.integers(1, 8))
def test_expm_matches_scipy_small_norm(seed, norm, n):
    a = _random(seed, n, norm)
    ref = scipy.linalg.expm(a)
    assert np.abs(expm(a) - ref).max() <= 1e-13 * np.abs(ref).max()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), norm=st.floats(1.0, 20.0), n=st.integers(1, 5))
def test_expm_matches_high_precision(seed, norm, n):
    # scipy's own error reaches ~1e-12 here, so compare with 40-digit arithmetic
    mpmath = pytest.importorskip("mpmath")
    a = _random(seed, n, norm)
    with mpmath.workdps(40):
        ref = np.array(mpmath.expm(mpmath.matrix(a.tolist())).tolist(), dtype=float)
    assert np.abs(expm(a) - ref).max() <= 1e-13 * norm * np.abs(ref).max()


@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_semigroup(tau):
    tf = transition_family(eliminate_delay(to_edge_system(example_spec(tau))))
    M = tf.hamiltonian.M
    for a, b in ((0.3, 0.7), (1.0, 1.0), (0.1, 0.9)):
        lhs = expm((a + b) * M)
        assert np.abs(lhs - expm(a * M) @ expm(b * M)).max() < 1e-10 * np.abs(lhs).max()


def test_H_at_zero_is_identity():
    tf = transition_family(eliminate_delay(to_edge_system(example_spec(0.5))))
    np.testing.assert_array_equal(build_H(tf, 0.0), np.eye(6))
    with pytest.raises(ValueError):
        build_H(tf, -1.0)


def test_H_nonsingular():
    tf = transition_family(eliminate_delay(to_edge_system(example_spec(0.0))))
    for phi in (0.5, 2.0, 7.5):
        H = tf.H(phi)
        assert abs(np.linalg.det(H)) > 1e-10 * np.abs(H).max() ** 6


@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_H_inverse_from_blocks(solved_for, tau):
    cf = solved_for(tau)
    tf = transition_family(cf.system)
    m = tf.m
    for phi in (0.5, 2.0, cf.system.horizon):
        blk = cf.solution.functions.blocks(phi)[0]
        inv = np.zeros((2 * m, 2 * m))
        for k in range(m):
            (al, be), (ga, et) = blk[k]
            det = al * et - be * ga
            idx = np.ix_([k, m + k], [k, m + k])
            inv[idx] = np.array([[et, -be], [-ga, al]]) / det
        ref = np.linalg.inv(tf.H(phi))
        assert np.abs(inv - ref).max() < 1e-8 * max(1.0, np.abs(ref).max())


def test_solve_global_initial_value_and_shape():
    tf = transition_family(eliminate_delay(to_edge_system(example_spec(0.5))))
    sol = solve_global(tf)
    np.testing.assert_allclose(sol.y(0.0)[0], tf.system.y0, atol=1e-12)
    flat = solve_global(tf, tf.system.y0.ravel())
    np.testing.assert_allclose(flat.y(1.0), sol.y(1.0), atol=1e-14)
    assert sol.psi(np.array([0.0, 1.0])).shape == (2, 3, 6, 2)
    with pytest.raises(ValueError):
        sol.y(7.6)


def test_ill_conditioned_guard():
    dfs = eliminate_delay(to_edge_system(example_spec(0.5)))
    with pytest.raises(SingularTPBVPError, match="ill-conditioned"):
        transition_family(dfs, cond_limit=1.0)


@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_single_edge_against_shooting(tau):
    spec = single_edge_spec(tau=tau)
    sol = solve_global(transition_family(eliminate_delay(to_edge_system(spec))))
    t, ref = pontryagin_shooting(1.0, 1.0, 1.0, tau, 8.0, np.array([1.0, 0.0]))
    got = sol.y(t[::500])[:, :, 0]
    assert np.abs(got - ref[::500]).max() < 1e-5
