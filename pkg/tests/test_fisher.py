import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ngdlab import fisher, model, oracle
from ngdlab.errors import CapacityError, ShapeError, StateError
from ngdlab.model import DenseLayer, NetworkModel

from conftest import random_problem


def _filled_cache(net, X, Y):
    _, cache = model.forward(net, X)
    grads = model.backward(net, cache, Y)
    return cache, grads


def test_layer_jacobian_examples():
    J = fisher.layer_jacobian_explicit([[1.0], [2.0]], [[3.0]])
    np.testing.assert_array_equal(J, [[3.0, 6.0]])
    np.testing.assert_array_equal(fisher.layer_jacobian_explicit(np.ones((3, 4)), np.zeros((2, 4))), 0.0)
    with pytest.raises(ShapeError):
        fisher.layer_jacobian_explicit(np.ones((3, 4)), np.ones((2, 5)))


def test_layer_jacobian_rows_are_per_sample_gradients(rng):
    net, X, Y = random_problem(rng, [3, 4, 2], m=6)
    cache, grads = _filled_cache(net, X, Y)
    for l, (I, G) in enumerate(zip(cache.inputs, cache.grads)):
        J = fisher.layer_jacobian_explicit(I, G)
        for i in range(6):
            np.testing.assert_array_equal(J[i], np.outer(I[:, i], G[:, i]).reshape(-1))
        np.testing.assert_allclose(J.sum(axis=0).reshape(grads[l].shape) / 6, grads[l], rtol=1e-13, atol=1e-16)


def test_gram_examples():
    np.testing.assert_array_equal(fisher.gram_jacobian([[1.0], [2.0]], [[3.0]]), [[45.0]])
    I = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(fisher.gram_jacobian(I, np.ones((5, 4))), 5 * I.T @ I)


@settings(max_examples=100, deadline=None)
@given(d_i=st.integers(1, 8), d_o=st.integers(1, 8), m=st.integers(1, 16), seed=st.integers(0, 2**31))
def test_gram_equals_explicit_product(d_i, d_o, m, seed):
    rng = np.random.default_rng(seed)
    I, G = rng.standard_normal((d_i, m)), rng.standard_normal((d_o, m))
    J = fisher.layer_jacobian_explicit(I, G)
    ref = J @ J.T
    assert np.max(np.abs(fisher.gram_jacobian(I, G) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_full_fim_single_sample_outer_product():
    net = NetworkModel([DenseLayer(np.zeros((2, 1)), "identity")], "gaussian")
    cache, grads = _filled_cache(net, [[0.5]], [[-2.0]])
    np.testing.assert_array_equal(model.flatten_grads(grads)[:, 0], [1.0, 2.0])
    np.testing.assert_array_equal(fisher.full_empirical_fim(cache), [[1.0, 2.0], [2.0, 4.0]])


def test_full_fim_zero_gradients(rng):
    net, X, _ = random_problem(rng, [2, 3, 2], m=4)
    pred, _ = model.forward(net, X)
    cache, _ = _filled_cache(net, X, pred)
    np.testing.assert_array_equal(fisher.full_empirical_fim(cache), 0.0)


@pytest.mark.parametrize("head", ["gaussian", "categorical"])
def test_full_fim_matches_per_sample_outer_products(rng, head):
    net, X, Y = random_problem(rng, [3, 4, 3], head=head, m=8)
    cache, _ = _filled_cache(net, X, Y)
    F = fisher.full_empirical_fim(cache)
    ref = np.zeros_like(F)
    for i in range(8):
        c, g = _filled_cache(net, X[:, i : i + 1], Y[:, i : i + 1])
        v = model.flatten_grads(g)
        ref += v @ v.T / 8
    assert np.max(np.abs(F - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_full_fim_psd_and_rank(rng):
    net, X, Y = random_problem(rng, [4, 5, 2], m=6)
    cache, _ = _filled_cache(net, X, Y)
    F = fisher.full_empirical_fim(cache)
    np.testing.assert_array_equal(F, F.T)
    np.linalg.cholesky(F + 1e-12 * np.eye(F.shape[0]))
    s = np.linalg.svd(F, compute_uv=False)
    assert np.all(s[6:] < 1e-10)


def test_block_fim_is_diagonal_block_of_full(rng):
    net, X, Y = random_problem(rng, [3, 4, 3, 2], head="categorical", m=7)
    cache, _ = _filled_cache(net, X, Y)
    F = fisher.full_empirical_fim(cache)
    start = 0
    for l, (I, G) in enumerate(zip(cache.inputs, cache.grads)):
        block = fisher.block_fim(I, G, l)
        p = block.F.shape[0]
        np.testing.assert_allclose(block.F, F[start : start + p, start : start + p], rtol=1e-14, atol=1e-17)
        start += p


def test_block_fim_single_layer_equals_full(rng):
    net, X, Y = random_problem(rng, [4, 3], m=5, activation="identity")
    cache, _ = _filled_cache(net, X, Y)
    block = fisher.block_fim(cache.inputs[0], cache.grads[0])
    np.testing.assert_allclose(block.F, fisher.full_empirical_fim(cache), rtol=1e-14, atol=1e-17)


def test_block_fim_zero_and_psd(rng):
    assert np.all(fisher.block_fim(np.ones((3, 4)), np.zeros((2, 4))).F == 0.0)
    for _ in range(5):
        I, G = rng.standard_normal((5, 3)), rng.standard_normal((4, 3))
        F = fisher.block_fim(I, G).F
        assert np.min(np.linalg.eigvalsh(F)) >= -1e-12
        np.linalg.cholesky(F + 1e-12 * np.eye(F.shape[0]))


def test_dense_cap_guard(rng):
    net, X, Y = random_problem(rng, [10, 10, 1], m=3)
    cache, _ = _filled_cache(net, X, Y)
    with pytest.raises(CapacityError):
        fisher.full_empirical_fim(cache, cap=100)
    with pytest.raises(CapacityError):
        fisher.block_fim(cache.inputs[0], cache.grads[0], cap=50)


def test_fim_requires_backward(rng):
    net, X, _ = random_problem(rng, [2, 2], m=3)
    _, cache = model.forward(net, X)
    with pytest.raises(StateError):
        fisher.full_empirical_fim(cache)


def test_gram_block_damped_matches_definition(rng):
    I, G = rng.standard_normal((4, 5)), rng.standard_normal((3, 5))
    blk = fisher.gram_block(I, G, 0, beta=0.3)
    J = fisher.layer_jacobian_explicit(I, G)
    np.testing.assert_allclose(blk.damped(), J @ J.T / 5 + 0.3 * np.eye(5), rtol=1e-12)


def test_score_examples(rng):
    net, X, _ = random_problem(rng, [2, 3, 1], m=1)
    pred, _ = model.forward(net, X)
    np.testing.assert_array_equal(fisher.score(net, X, pred), 0.0)

    bern = oracle.bernoulli_net(0.0)
    s = fisher.score(bern, [[0.0]], [[0.0], [1.0]])[:, 0]
    # parameters: [w_x0, w_x1, bias0, bias1]
    assert s[3] == pytest.approx(0.5, abs=1e-15)
    assert s[2] == pytest.approx(-0.5, abs=1e-15)

    net, X, Y = random_problem(rng, [3, 2, 2], head="categorical", m=1)
    _, cache = model.forward(net, X)
    g = model.flatten_grads(model.backward(net, cache, Y))
    np.testing.assert_array_equal(fisher.score(net, X, Y), -g)


def test_model_fim_gaussian_linear_is_input_second_moment(rng):
    net, X, _ = random_problem(rng, [3, 2], m=6, activation="identity")
    _, cache = model.forward(net, X)
    Xa = np.vstack([X, np.ones((1, 6))])
    expected = np.kron(Xa @ Xa.T / 6, np.eye(2))
    np.testing.assert_allclose(fisher.model_fim(net, cache), expected, atol=1e-14)
