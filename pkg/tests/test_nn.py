import os
import sys

import numpy as np
import pytest

TEST_ROOT = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.dirname(TEST_ROOT)

sys.path.insert(0, PROJECT_ROOT)

from gaitprior import nn


def squared_loss(target):
    def loss_fn(out):
        diff = out - target
        return float(np.sum(diff * diff)), 2.0 * diff
    return loss_fn


@pytest.mark.parametrize('seed', range(20))
def test_finite_diff(seed):
    rng = np.random.default_rng(seed)
    n_layers = int(rng.integers(1, 4))
    sizes = [int(s) for s in rng.integers(1, 17, size=n_layers + 1)]
    output = 'tanh' if seed % 2 else 'identity'
    net = nn.Mlp.init(sizes, rng, output_activation=output)
    x = rng.normal(size=(3, sizes[0]))
    target = rng.normal(size=(3, sizes[-1]))

    report = nn.finite_diff_check(net, squared_loss(target), x, h=1e-3)
    assert report.passed, report
    assert report.n_parameters == net.n_parameters()


def test_finite_diff_single_vector():
    rng = np.random.default_rng(7)
    net = nn.Mlp.init([4, 8, 3], rng)
    report = nn.finite_diff_check(net, squared_loss(np.ones(3)),
                                  rng.normal(size=4))
    assert report.passed


def test_forward_shapes():
    rng = np.random.default_rng(0)
    net = nn.Mlp.init([3, 5, 2], rng)
    assert nn.forward(net, np.zeros(3)).shape == (2,)
    assert nn.forward(net, np.zeros((7, 3))).shape == (7, 2)

    # zero biases and zero input
    assert np.all(nn.forward(net, np.zeros(3)) == 0.0)

    with pytest.raises(nn.NnException):
        nn.forward(net, np.zeros(4))


def test_batch_gradient_is_sum():
    rng = np.random.default_rng(1)
    net = nn.Mlp.init([2, 4, 2], rng)
    x = rng.normal(size=(5, 2))
    up = rng.normal(size=(5, 2))
    batch = nn.backward(net, x, up)
    total = nn.Gradients.zeros(net)
    for xi, ui in zip(x, up):
        total = total + nn.backward(net, xi, ui)
    for a, b in zip(batch.arrays(), total.arrays()):
        assert np.allclose(a, b)


def test_invalid_mlp():
    with pytest.raises(nn.NnException):
        nn.Mlp([3], [], [])
    with pytest.raises(nn.NnException):
        nn.Mlp([2, 2], [np.zeros((2, 3))], [np.zeros(2)])
    with pytest.raises(nn.NnException):
        nn.Mlp([2, 2], [np.full((2, 2), np.nan)], [np.zeros(2)])
    with pytest.raises(nn.NnException):
        nn.Mlp([2, 2], [np.zeros((2, 2))], [np.zeros(2)],
               hidden_activation='relu')


def test_adam_first_step():
    params = [np.array([1.0, -2.0])]
    grads = [np.array([0.5, -3.0])]
    state = nn.AdamState.for_parameters(params, lr=0.1)
    new_params, new_state = nn.adam_step(params, grads, state)

    # bias corrected first step moves every entry by lr against the sign
    assert new_params[0] == pytest.approx([0.9, -1.9], abs=1e-6)
    assert new_state.step_count == 1
    assert params[0].tolist() == [1.0, -2.0]


def test_adam_zero_lr():
    params = [np.array([1.0, 2.0])]
    state = nn.AdamState.for_parameters(params, lr=0.0)
    new_params, _ = nn.adam_step(params, [np.array([3.0, 4.0])], state)
    assert np.array_equal(new_params[0], params[0])


def test_adam_errors():
    params = [np.zeros(2)]
    state = nn.AdamState.for_parameters(params)
    with pytest.raises(nn.NnException):
        nn.adam_step(params, [np.zeros(3)], state)
    with pytest.raises(nn.NnException) as e:
        nn.adam_step(params, [np.array([np.inf, 0.0])], state,
                     names=['layer 0 weights'])
    assert 'layer 0 weights' in str(e.value)
    state.lr = -1.0
    with pytest.raises(nn.NnException):
        nn.adam_step(params, [np.zeros(2)], state)


def test_clip_grad_norm():
    grads = [np.array([3.0]), np.array([4.0])]
    clipped, norm = nn.clip_grad_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    total = np.sqrt(sum(float(np.sum(g * g)) for g in clipped))
    assert total == pytest.approx(1.0, rel=1e-5)

    same, _ = nn.clip_grad_norm(grads, 10.0)
    assert same[0][0] == 3.0 and same[1][0] == 4.0


def test_forward_examples():
    identity = nn.Mlp([2, 2], [np.eye(2)], [np.zeros(2)])
    assert nn.forward(identity, [1.0, 2.0]).tolist() == [1.0, 2.0]

    linear = nn.Mlp([2, 2], [[[2.0, 0.0], [0.0, 3.0]]], [[1.0, 1.0]])
    assert nn.forward(linear, [1.0, 1.0]).tolist() == [3.0, 4.0]

    squashed = nn.Mlp([3, 2], [np.zeros((2, 3))], [np.zeros(2)],
                      output_activation='tanh')
    assert nn.forward(squashed, [5.0, -1.0, 2.0]).tolist() == [0.0, 0.0]


def test_backward_examples():
    scalar = nn.Mlp([1, 1], [[[0.7]]], [[0.0]])
    grads = nn.backward(scalar, [3.0], [1.0])
    assert grads.weights[0].tolist() == [[3.0]]
    assert grads.biases[0].tolist() == [1.0]
    assert grads.input.tolist() == [0.7]

    rng = np.random.default_rng(3)
    net = nn.Mlp.init([3, 5, 4, 2], rng)
    zero = nn.backward(net, rng.normal(size=(6, 3)), np.zeros((6, 2)))
    assert all(np.all(a == 0.0) for a in zero.arrays())
    assert np.all(zero.input == 0.0)


def test_finite_diff_linear_least_squares():
    rng = np.random.default_rng(11)
    net = nn.Mlp.init([3, 2], rng)
    x = rng.normal(size=(8, 3))
    target = rng.normal(size=(8, 2))
    report = nn.finite_diff_check(net, squared_loss(target), x, h=1e-3)
    assert report.max_rel_error <= 1e-6


def test_finite_diff_constant_loss():
    rng = np.random.default_rng(12)
    net = nn.Mlp.init([4, 6, 2], rng)

    def constant(out):
        return 1.5, np.zeros_like(out)

    report = nn.finite_diff_check(net, constant, rng.normal(size=(3, 4)))
    assert all(np.all(a == 0.0) for a in report.analytic)
    assert report.max_abs_error == 0.0


def test_adam_zero_gradient():
    params = [np.array([[1.0, -2.0]]), np.array([0.5])]
    state = nn.AdamState.for_parameters(params, lr=0.1, step_count=4)
    new_params, new_state = nn.adam_step(
        params, [np.zeros((1, 2)), np.zeros(1)], state)
    for a, b in zip(new_params, params):
        assert np.array_equal(a, b)
    assert new_state.step_count == 5


def reference_adam(p, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    p = list(p)
    m = [0.0] * len(p)
    v = [0.0] * len(p)
    for t, g in enumerate(grads, 1):
        for i in range(len(p)):
            m[i] = b1 * m[i] + (1 - b1) * g[i]
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i]
            m_hat = m[i] / (1 - b1 ** t)
            v_hat = v[i] / (1 - b2 ** t)
            p[i] -= lr * m_hat / (v_hat ** 0.5 + eps)
    return p


def test_adam_two_steps_match_reference():
    start = [0.3, -1.2, 2.5]
    grads = [[0.1, -0.4, 2.0], [-0.3, 0.2, 1.0]]
    params = [np.array(start)]
    state = nn.AdamState.for_parameters(params, lr=0.01)
    for g in grads:
        params, state = nn.adam_step(params, [np.array(g)], state)
    assert state.step_count == 2
    assert params[0] == pytest.approx(reference_adam(start, grads, 0.01),
                                      abs=1e-12)


def test_pure_functions():
    rng = np.random.default_rng(5)
    net = nn.Mlp.init([4, 7, 3], rng, output_activation='tanh')
    x = rng.normal(size=(5, 4))
    up = rng.normal(size=(5, 3))

    assert np.array_equal(nn.forward(net, x), nn.forward(net, x))
    first = nn.backward(net, x, up).arrays()
    second = nn.backward(net, x, up).arrays()
    assert all(np.array_equal(a, b) for a, b in zip(first, second))

    params = net.parameters()
    state = nn.AdamState.for_parameters(params)
    one, state_one = nn.adam_step(params, first, state)
    two, state_two = nn.adam_step(params, first, state)
    assert all(np.array_equal(a, b) for a, b in zip(one, two))
    assert all(np.array_equal(a, b) for a, b in
               zip(state_one.second_moment, state_two.second_moment))
    assert state.step_count == 0
