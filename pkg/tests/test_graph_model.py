import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dggdelay.graph_model import (
    DirectedGraph,
    EdgeWeights,
    check_weights,
    distributed_laplacian,
    extended_laplacian,
    incidence_matrix,
    kron,
)

EXAMPLE = DirectedGraph(4, [(0, 1), (1, 2), (1, 3)])


def test_incidence_example_graph():
    d = incidence_matrix(EXAMPLE)
    np.testing.assert_array_equal(d, [[-1, 0, 0], [1, -1, -1], [0, 1, 0], [0, 0, 1]])


def test_incidence_single_edge():
    np.testing.assert_array_equal(incidence_matrix(DirectedGraph(2, [(0, 1)])), [[-1], [1]])


def test_incidence_cycle_columns_sum_to_zero():
    d = incidence_matrix(DirectedGraph(3, [(0, 1), (1, 2), (2, 0)]))
    np.testing.assert_array_equal(d.sum(axis=0), 0)
    assert np.linalg.matrix_rank(d) == 2


def test_incidence_is_a_copy():
    d = incidence_matrix(EXAMPLE)
    d[0, 0] = 5
    assert incidence_matrix(EXAMPLE)[0, 0] == -1


def test_laplacian_agent_one():
    # sum of w_k d_k d_k^T written out edge by edge
    l1 = np.zeros((4, 4))
    for w, (a, b) in zip((1.0, 0.7, 0.5), EXAMPLE.edges):
        e = np.zeros(4)
        e[a], e[b] = -1, 1
        l1 += w * np.outer(e, e)
    got = distributed_laplacian(EXAMPLE, [1, 0.7, 0.5])
    np.testing.assert_allclose(got, l1, atol=1e-15)
    np.testing.assert_allclose(
        got, [[1, -1, 0, 0], [-1, 2.2, -0.7, -0.5], [0, -0.7, 0.7, 0], [0, -0.5, 0, 0.5]], atol=1e-15
    )


def test_laplacian_zero_weights():
    np.testing.assert_array_equal(distributed_laplacian(EXAMPLE, np.zeros(3)), np.zeros((4, 4)))


def test_laplacian_rejects_bad_weights():
    with pytest.raises(ValueError, match="length"):
        distributed_laplacian(EXAMPLE, [1, 2])
    with pytest.raises(ValueError, match="nonnegative"):
        distributed_laplacian(EXAMPLE, [1, -1, 0])


def test_kron_examples():
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    k = kron([[0, 1], [0, 0]], np.eye(2))
    expect = np.zeros((4, 4))
    expect[:2, 2:] = np.eye(2)
    np.testing.assert_array_equal(k, expect)


def test_kron_transpose_and_mixed_product():
    rng = np.random.default_rng(3)
    x, y = rng.normal(size=(2, 2)), rng.normal(size=(3, 3))
    u, v = rng.normal(size=(2, 2)), rng.normal(size=(3, 3))
    np.testing.assert_allclose(kron(x, y).T, kron(x.T, y.T), atol=1e-14)
    np.testing.assert_allclose(kron(x, y) @ kron(u, v), kron(x @ u, y @ v), atol=1e-12)


@pytest.mark.parametrize("edges, msg", [
    ([(0, 0)], "self-loop"),
    ([(0, 5)], "missing node"),
    ([(0, 1), (0, 1)], "duplicate"),
    ([(0, 1)], "unreachable"),
])
def test_graph_validation(edges, msg):
    with pytest.raises(ValueError, match=msg):
        DirectedGraph(3 if msg == "unreachable" else 2, edges)


def test_weights_must_be_local():
    w = EdgeWeights(np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1.0], [0, 0, 0]]), np.zeros((4, 3)), np.ones(4))
    with pytest.raises(ValueError, match="agent 2 has running weight on non-incident edge"):
        check_weights(EXAMPLE, w)


def test_weights_leader_row_and_penalty():
    with pytest.raises(ValueError, match="leader"):
        EdgeWeights(np.ones((2, 1)), np.zeros((2, 1)), np.ones(2))
    with pytest.raises(ValueError, match="positive"):
        EdgeWeights(np.array([[0.0], [1.0]]), np.zeros((2, 1)), np.array([0.0, 0.0]))


weights3 = arrays(float, 3, elements=st.floats(0, 10, allow_nan=False))
states = arrays(float, (4, 2), elements=st.floats(-100, 100, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(w=weights3, x=states)
def test_sum_of_squares_property(w, x):
    q = 2
    lhat = extended_laplacian(EXAMPLE, w, q)
    quad = x.ravel() @ lhat @ x.ravel()
    direct = sum(wk * np.sum((x[b] - x[a]) ** 2) for wk, (a, b) in zip(w, EXAMPLE.edges))
    assert quad == pytest.approx(direct, rel=1e-12, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(w=weights3)
def test_laplacian_symmetric_psd_zero_rows(w):
    lap = distributed_laplacian(EXAMPLE, w)
    np.testing.assert_array_equal(lap, lap.T)
    assert np.linalg.eigvalsh(lap).min() >= -1e-10 * max(1.0, w.max())
    np.testing.assert_allclose(lap.sum(axis=1), 0, atol=1e-12)
