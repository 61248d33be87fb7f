import math

import numpy as np
import pytest

from adaact.errors import CacheError, DegenerateVarianceError, DimensionError, GeometryError, LabelError
from adaact.nn import (LayerCache, activation_variance, backward, forward, init_network,
                       softmax_cross_entropy)

from oracles import conv_nested_loops, finite_difference_grads, max_relative_error, randomize_biases


def _dense(theta):
    net = init_network([f"dense:{theta.shape[0]}"], 0, (theta.shape[1] - 1,))
    net.params[0].theta = np.array(theta, dtype=float)
    return net


def test_forward_identity_weights():
    net = _dense(np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    np.testing.assert_array_equal(forward(net, np.array([[2.0, 5.0]])), [[2.0, 5.0]])


def test_forward_bias_only():
    net = _dense(np.array([[0.0, 0.0, 7.0]]))
    np.testing.assert_array_equal(forward(net, np.array([[3.0, -4.0]])), [[7.0]])


def test_identity_conv_reproduces_map():
    net = init_network(["conv:1:1", "flatten", "dense:1"], 0, (1, 2, 2))
    net.params[0].theta = np.array([[1.0, 0.0]])
    x = np.array([[1.0, 2.0, 3.0, 4.0]])
    forward(net, x)
    np.testing.assert_array_equal(net.params[0].cache.z[:, 0], [1, 2, 3, 4])


def test_forward_dimension_error_indexes_layer():
    net = init_network(["dense:3"], 0, (4,))
    with pytest.raises(DimensionError, match="layer 0"):
        forward(net, np.zeros((2, 5)))


def test_uniform_logits_give_log_k():
    for k in (2, 5, 10):
        loss, _ = softmax_cross_entropy(np.full((3, k), 0.7), np.zeros(3, dtype=int))
        assert abs(loss - math.log(k)) < 1e-15


def test_single_layer_gradient_closed_form(rng):
    theta = rng.standard_normal((3, 5))
    net = _dense(theta)
    x = rng.standard_normal((1, 4))
    z = forward(net, x)
    _, grads = backward(net, z, np.array([2]))
    p = np.exp(z[0] - z[0].max())
    p /= p.sum()
    p[2] -= 1.0
    a = np.append(x[0], 1.0)
    np.testing.assert_allclose(grads[0], np.outer(p, a), rtol=0, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_gradcheck_mlp(seed):
    r = np.random.default_rng(seed)
    net = init_network(["dense:8", "relu", "dense:4"], seed, (5,))
    randomize_biases(net, r)
    x = r.standard_normal((6, 5))
    y = r.integers(0, 4, 6)
    _, grads = backward(net, forward(net, x), y)
    assert max_relative_error(grads, finite_difference_grads(net, x, y)) < 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_gradcheck_conv(seed):
    r = np.random.default_rng(seed)
    net = init_network(["conv:2:3:1:1", "relu", "conv:2:2:2:0", "relu", "flatten", "dense:3"],
                       seed, (1, 6, 6))
    randomize_biases(net, r)
    x = r.standard_normal((3, 36))
    y = r.integers(0, 3, 3)
    _, grads = backward(net, forward(net, x), y)
    assert max_relative_error(grads, finite_difference_grads(net, x, y)) < 1e-4


@pytest.mark.parametrize("shape,k,s,p", [
    ((1, 1, 5, 5), 3, 1, 0), ((2, 3, 8, 8), 3, 1, 1), ((2, 2, 7, 7), 3, 2, 0), ((1, 3, 6, 6), 2, 2, 0),
])
def test_conv_matches_nested_loops(shape, k, s, p):
    r = np.random.default_rng(sum(shape))
    net = init_network([f"conv:4:{k}:{s}:{p}", "flatten", "dense:2"], 1, shape[1:])
    net.params[0].theta[:, -1] = r.standard_normal(4)
    x = r.standard_normal(shape)
    forward(net, x.reshape(shape[0], -1))
    conv = net.params[0]
    g = conv.geometry
    got = conv.cache.z.reshape(shape[0], g.out_h, g.out_w, 4).transpose(0, 3, 1, 2)
    want = conv_nested_loops(x, conv.theta, k, s, p)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


def test_cached_bias_column_is_one(rng):
    net = init_network(["conv:3:3:1:1", "relu", "flatten", "dense:5", "relu", "dense:2"], 4, (2, 4, 4))
    forward(net, rng.standard_normal((3, 32)))
    for cache in net.caches:
        assert np.all(cache.a_tilde[:, -1] == 1.0)
    assert net.caches[0].a_tilde.shape[0] == 3 * 16


def test_loss_shift_invariance(rng):
    z = rng.standard_normal((4, 6))
    y = rng.integers(0, 6, 4)
    base, _ = softmax_cross_entropy(z, y)
    for c in (-50.0, 3.0, 1e3):
        assert abs(softmax_cross_entropy(z + c, y)[0] - base) < 1e-12


def test_backward_requires_forward():
    net = init_network(["dense:2"], 0, (3,))
    with pytest.raises(CacheError):
        backward(net, np.zeros((1, 2)), np.array([0]))


def test_backward_rejects_bad_labels(rng):
    net = init_network(["dense:2"], 0, (3,))
    z = forward(net, rng.standard_normal((2, 3)))
    with pytest.raises(LabelError):
        backward(net, z, np.array([0, 2]))


def test_init_deterministic_and_bounded():
    a = init_network(["dense:100"], 9, (50,))
    b = init_network(["dense:100"], 9, (50,))
    assert a.params[0].theta.tobytes() == b.params[0].theta.tobytes()
    theta = a.params[0].theta
    assert theta.shape == (100, 51)
    assert np.all(theta[:, -1] == 0.0)
    assert np.abs(theta[:, :-1]).max() <= math.sqrt(6 / 50)


@pytest.mark.parametrize("spec,shape", [
    (["conv:2:3"], (1, 4, 4)),
    (["conv:2:3:2:0", "flatten", "dense:2"], (1, 4, 4)),
    (["conv:2:3", "dense:2"], (1, 5, 5)),
    (["dense:3", "relu"], (4,)),
    (["pool:2"], (4,)),
])
def test_init_rejects_inconsistent_specs(spec, shape):
    with pytest.raises(GeometryError):
        init_network(spec, 0, shape)


def test_activation_variance_population_form():
    a = np.array([[1.0, 5.0, 1.0], [3.0, 5.0, 1.0]])
    np.testing.assert_array_equal(activation_variance(LayerCache(a, None)), [1.0, 0.0, 0.0])


def test_activation_variance_needs_two_rows():
    with pytest.raises(DegenerateVarianceError):
        activation_variance(LayerCache(np.ones((1, 3)), None))
