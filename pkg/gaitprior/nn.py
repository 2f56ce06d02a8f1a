"""Dense networks with hand-written reverse mode.

Every network in the package is a multilayer perceptron: the policy and value
function of the learner as well as the encoder and decoder of the latent
action prior. The layer structure is static, so gradients are accumulated by
walking the layers backwards instead of recording a tape.

All arithmetic is float64. Inputs may be a single vector of length
``layer_sizes[0]`` or a batch with one sample per row; gradients of a batch are
summed over its rows.
"""

import logging

import numpy as np

from gaitprior.common import GaitPriorException

logger = logging.getLogger('gaitprior.nn')

ACTIVATIONS = ('tanh', 'identity')

FD_STEP = 1e-5
"""Central difference step used by :func:`finite_diff_check`.
"""

FD_FLOOR = 1e-4
"""Gradient magnitudes below this value are compared absolutely.
"""


class NnException(GaitPriorException):
    pass


def _activate(name, z):
    if name == 'tanh':
        return np.tanh(z)
    return z


def _activate_grad(name, out):
    # derivative expressed through the activation output
    if name == 'tanh':
        return 1.0 - out * out
    return np.ones_like(out)


class Mlp(object):
    """Multilayer perceptron.

    ``weights[l]`` has shape ``(layer_sizes[l+1], layer_sizes[l])`` (rows are
    outputs) and ``biases[l]`` has length ``layer_sizes[l+1]``.

    Args:
        layer_sizes (list of int): units per layer, input first.
        weights (list of ndarray): one matrix per layer.
        biases (list of ndarray): one vector per layer.
        hidden_activation (str): ``'tanh'`` or ``'identity'``.
        output_activation (str): ``'tanh'`` or ``'identity'``.
    """

    def __init__(self, layer_sizes, weights, biases, hidden_activation='tanh',
                 output_activation='identity'):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or min(layer_sizes) < 1:
            raise NnException('Invalid layer sizes: %s' % (layer_sizes))
        for act in [hidden_activation, output_activation]:
            if act not in ACTIVATIONS:
                raise NnException('Unknown activation: %s' % (act))
        n = len(layer_sizes) - 1
        if len(weights) != n or len(biases) != n:
            raise NnException('Expect %d layers, got %d weights and %d biases'
                              % (n, len(weights), len(biases)))

        self.layer_sizes = layer_sizes
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation

        for l in range(n):
            shape = (layer_sizes[l + 1], layer_sizes[l])
            if self.weights[l].shape != shape:
                raise NnException('Layer %d weights: expect shape %s, got %s'
                                  % (l, shape, self.weights[l].shape))
            if self.biases[l].shape != (layer_sizes[l + 1],):
                raise NnException('Layer %d biases: expect length %d, got %s'
                                  % (l, layer_sizes[l + 1],
                                     self.biases[l].shape))
            if not (np.all(np.isfinite(self.weights[l])) and
                    np.all(np.isfinite(self.biases[l]))):
                raise NnException('Layer %d has non-finite parameters' % (l))

    @classmethod
    def init(cls, layer_sizes, rng, hidden_activation='tanh',
             output_activation='identity'):
        """Glorot-uniform weights, zero biases.

        Args:
            layer_sizes (list of int): units per layer, input first.
            rng (:class:`numpy.random.Generator`): source of randomness.
        """
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(layer_sizes, weights, biases, hidden_activation,
                   output_activation)

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        return self.layer_sizes[-1]

    def parameters(self):
        """Parameter arrays in the order ``W0, b0, W1, b1, ...``."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def parameter_names(self):
        names = []
        for l in range(self.n_layers):
            names.extend(['layer %d weights' % (l), 'layer %d biases' % (l)])
        return names

    def with_parameters(self, params):
        """A new network with the same structure and the given parameters."""
        if len(params) != 2 * self.n_layers:
            raise NnException('Expect %d parameter arrays, got %d' %
                              (2 * self.n_layers, len(params)))
        return Mlp(self.layer_sizes, params[0::2], params[1::2],
                   self.hidden_activation, self.output_activation)

    def n_parameters(self):
        return int(sum(p.size for p in self.parameters()))

    def __eq__(self, other):
        if not isinstance(other, Mlp):
            return False
        return self.layer_sizes == other.layer_sizes and \
            self.hidden_activation == other.hidden_activation and \
            self.output_activation == other.output_activation and \
            all(np.array_equal(a, b) for a, b in
                zip(self.parameters(), other.parameters()))


class Gradients(object):
    """Gradients of a scalar loss with respect to the parameters of an
    :class:`Mlp`, plus the gradient with respect to its input.
    """

    def __init__(self, weights, biases, input=None):
        self.weights = weights
        self.biases = biases
        self.input = input

    @classmethod
    def zeros(cls, net):
        return cls([np.zeros_like(w) for w in net.weights],
                   [np.zeros_like(b) for b in net.biases])

    def arrays(self):
        """Gradient arrays in the order of :meth:`Mlp.parameters`."""
        arrays = []
        for w, b in zip(self.weights, self.biases):
            arrays.extend([w, b])
        return arrays

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def __add__(self, other):
        return Gradients([a + b for a, b in zip(self.weights, other.weights)],
                         [a + b for a, b in zip(self.biases, other.biases)])


def _check_input(net, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != net.input_dim:
        raise NnException('Input dimension mismatch: expect %d, got shape %s'
                          % (net.input_dim, x.shape))
    return x


def _trace(net, x):
    acts = [x]
    h = x
    last = net.n_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h.dot(w.T) + b
        h = _activate(net.output_activation if l == last
                      else net.hidden_activation, z)
        acts.append(h)
    return acts


def forward(net, x):
    """Evaluate the network.

    Args:
        net (:class:`Mlp`): the network.
        x (ndarray): input vector, or a batch with one sample per row.

    Returns:
        ndarray: output vector (or batch of outputs).

    Raises:
        NnException: if the input length does not match ``layer_sizes[0]``.
    """
    return _trace(net, _check_input(net, x))[-1]


def backward(net, x, upstream):
    """Reverse accumulation of ``upstream`` through the network.

    Args:
        net (:class:`Mlp`): the network.
        x (ndarray): the input the loss was evaluated on.
        upstream (ndarray): gradient of the loss with respect to the network
          output, same shape as ``forward(net, x)``.

    Returns:
        :class:`Gradients`: parameter gradients (summed over a batch) and the
        input gradient in ``.input``.
    """
    x = _check_input(net, x)
    acts = _trace(net, x)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != acts[-1].shape:
        raise NnException('Upstream gradient shape mismatch: expect %s, got %s'
                          % (acts[-1].shape, upstream.shape))

    grad_w = [None] * net.n_layers
    grad_b = [None] * net.n_layers
    delta = upstream * _activate_grad(net.output_activation, acts[-1])
    for l in reversed(range(net.n_layers)):
        h_in = acts[l]
        if x.ndim == 2:
            grad_w[l] = delta.T.dot(h_in)
            grad_b[l] = delta.sum(axis=0)
        else:
            grad_w[l] = np.outer(delta, h_in)
            grad_b[l] = delta.copy()
        grad_in = delta.dot(net.weights[l])
        if l > 0:
            delta = grad_in * _activate_grad(net.hidden_activation, h_in)
    return Gradients(grad_w, grad_b, input=grad_in)


class AdamState(object):
    """Optimizer moments for a list of parameter arrays.

    Args:
        first_moment (list of ndarray): running mean of gradients.
        second_moment (list of ndarray): running mean of squared gradients.
        step_count (int): number of updates applied so far.
    """

    def __init__(self, first_moment, second_moment, step_count=0, lr=1e-3,
                 beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.first_moment = first_moment
        self.second_moment = second_moment
        self.step_count = step_count
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon

    @classmethod
    def for_parameters(cls, params, **kwargs):
        return cls([np.zeros_like(p) for p in params],
                   [np.zeros_like(p) for p in params], **kwargs)


def adam_step(params, grads, state, names=None):
    """One Adam update with bias correction.

    Args:
        params (list of ndarray): parameter arrays.
        grads (list of ndarray or :class:`Gradients`): matching gradients.
        state (:class:`AdamState`): moments for ``params``.
        names (list of str): parameter names used in error messages.

    Returns:
        tuple: ``(new_params, new_state)``; the inputs are not modified.

    Raises:
        NnException: on shape mismatch, negative learning rate or a non-finite
          gradient.
    """
    if isinstance(grads, Gradients):
        grads = grads.arrays()
    if names is None:
        names = ['parameter %d' % (i) for i in range(len(params))]
    if not (len(params) == len(grads) == len(state.first_moment)):
        raise NnException('Expect %d gradient arrays, got %d' %
                          (len(params), len(grads)))
    if state.lr < 0:
        raise NnException('Learning rate must be non-negative, got %r' %
                          (state.lr))

    for name, p, g, m in zip(names, params, grads, state.first_moment):
        if p.shape != np.shape(g) or p.shape != m.shape:
            raise NnException('%s: expect shape %s, got %s' %
                              (name, p.shape, np.shape(g)))
        if not np.all(np.isfinite(g)):
            raise NnException('Non-finite gradient in %s' % (name))

    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_params, first, second = [], [], []
    for p, g, m, v in zip(params, grads, state.first_moment,
                          state.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_params.append(p - state.lr * m_hat /
                          (np.sqrt(v_hat) + state.epsilon))
        first.append(m)
        second.append(v)

    return new_params, AdamState(first, second, t, state.lr, b1, b2,
                                 state.epsilon)


def clip_grad_norm(grads, max_norm):
    """Scale gradients so their joint L2 norm is at most ``max_norm``.

    Returns:
        tuple: ``(clipped gradient list, norm before clipping)``.
    """
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    coef = max_norm / (total + 1e-6)
    if coef < 1.0:
        return [g * coef for g in grads], total
    return list(grads), total


class FiniteDiffReport(object):
    """Outcome of :func:`finite_diff_check`."""

    def __init__(self, max_rel_error, max_abs_error, n_parameters, tolerance,
                 analytic):
        self.max_rel_error = max_rel_error
        self.max_abs_error = max_abs_error
        self.n_parameters = n_parameters
        self.tolerance = tolerance
        self.analytic = analytic

    @property
    def passed(self):
        return self.max_rel_error <= self.tolerance

    def __repr__(self):
        return 'FiniteDiffReport(max_rel_error=%.3g, n_parameters=%d, ' \
            'passed=%s)' % (self.max_rel_error, self.n_parameters,
                            self.passed)


def finite_diff_check(net, loss_fn, x, tolerance=1e-4, h=FD_STEP,
                      floor=FD_FLOOR):
    """Compare analytic gradients with central differences.

    Args:
        net (:class:`Mlp`): the network under test.
        loss_fn (callable): maps the network output to ``(loss, d loss / d
          output)``.
        x (ndarray): network input.
        tolerance (float): relative error accepted by ``report.passed``.
        h (float): difference step.
        floor (float): lower bound of the relative error denominator.

    Returns:
        :class:`FiniteDiffReport`
    """
    x = _check_input(net, x)
    _, upstream = loss_fn(forward(net, x))
    analytic = backward(net, x, upstream).arrays()

    params = net.parameters()
    max_rel, max_abs = 0.0, 0.0
    for i, p in enumerate(params):
        for idx in np.ndindex(p.shape):
            plus = [q.copy() for q in params]
            minus = [q.copy() for q in params]
            plus[i][idx] += h
            minus[i][idx] -= h
            loss_plus = loss_fn(forward(net.with_parameters(plus), x))[0]
            loss_minus = loss_fn(forward(net.with_parameters(minus), x))[0]
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            a = analytic[i][idx]
            err = abs(a - numeric)
            max_abs = max(max_abs, err)
            max_rel = max(max_rel, err / max(abs(a), abs(numeric), floor))

    report = FiniteDiffReport(max_rel, max_abs, net.n_parameters(), tolerance,
                              analytic)
    logger.debug('%r', report)
    return report
