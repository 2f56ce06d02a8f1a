"""Gaussian policy, value function and observation normalization.

The policy outputs the mean of a diagonal Gaussian over its action head. With
a latent action prior attached the head is ``a_l + a_full`` long: the latent
part goes through the frozen decoder, the residual part is blended in by
:func:`gaitprior.prior.compose_action`.

When a demonstration is attached the observation carries one trailing phase
channel ``phi / N`` that the running normalization leaves untouched.
"""

import math

import numpy as np

from gaitprior.common import GaitPriorException
from gaitprior.imitation import PhaseClock
from gaitprior.nn import Mlp, forward
from gaitprior.prior import compose_action, decode

DEFAULT_HIDDEN_SIZES = (64, 64)
NORM_CLIP = 10.0
NORM_EPSILON = 1e-8
ACTION_OUTPUT_GAIN = 0.01

LOG_2PI = math.log(2 * math.pi)

SAMPLE = 'sample'
DETERMINISTIC = 'deterministic'


class PpoException(GaitPriorException):
    pass


class PolicyParams(object):
    """Trainable parameters of the learner.

    * pi_net (:class:`Mlp`): ``obs_dim -> hidden -> head_dim``.
    * v_net (:class:`Mlp`): ``obs_dim -> hidden -> 1``.
    * log_std (ndarray): state-independent log standard deviation.
    """

    def __init__(self, pi_net, v_net, log_std):
        log_std = np.array(log_std, dtype=np.float64)
        if log_std.shape != (pi_net.output_dim,):
            raise PpoException('log_std length mismatch: expect %d, got %s' %
                               (pi_net.output_dim, log_std.shape))
        if not np.all(np.isfinite(log_std)):
            raise PpoException('log_std must be finite')
        if pi_net.input_dim != v_net.input_dim or v_net.output_dim != 1:
            raise PpoException('Value network must map %d inputs to 1 output'
                               % (pi_net.input_dim))
        self.pi_net = pi_net
        self.v_net = v_net
        self.log_std = log_std

    @classmethod
    def init(cls, obs_dim, head_dim, rng, hidden_sizes=DEFAULT_HIDDEN_SIZES):
        hidden = list(hidden_sizes)
        pi_net = Mlp.init([obs_dim] + hidden + [head_dim], rng)
        v_net = Mlp.init([obs_dim] + hidden + [1], rng)
        # start with near-zero action means
        params = pi_net.parameters()
        params[-2] = params[-2] * ACTION_OUTPUT_GAIN
        return cls(pi_net.with_parameters(params), v_net, np.zeros(head_dim))

    @property
    def obs_dim(self):
        return self.pi_net.input_dim

    @property
    def head_dim(self):
        return self.pi_net.output_dim

    def parameters(self):
        return self.pi_net.parameters() + self.v_net.parameters() + \
            [self.log_std.copy()]

    def parameter_names(self):
        return ['policy %s' % (n) for n in self.pi_net.parameter_names()] + \
            ['value %s' % (n) for n in self.v_net.parameter_names()] + \
            ['log_std']

    def with_parameters(self, params):
        n_pi = len(self.pi_net.parameters())
        n_v = len(self.v_net.parameters())
        return PolicyParams(self.pi_net.with_parameters(params[:n_pi]),
                            self.v_net.with_parameters(
                                params[n_pi:n_pi + n_v]),
                            params[n_pi + n_v])

    def __eq__(self, other):
        return isinstance(other, PolicyParams) and \
            self.pi_net == other.pi_net and self.v_net == other.v_net and \
            np.array_equal(self.log_std, other.log_std)


class RunningNorm(object):
    """Running mean and variance of observations.

    Only the first ``mean.size`` columns of an observation are normalized;
    any trailing columns (the phase channel) pass through unchanged.

    Args:
        dim (int): number of normalized columns.
        count (float): number of observations merged so far.
        mean (ndarray): running mean, zeros if omitted.
        var (ndarray): running population variance, ones if omitted.
        clip (float): normalized values are clipped to ``[-clip, clip]``.
    """

    def __init__(self, dim, count=0.0, mean=None, var=None, clip=NORM_CLIP):
        self.count = float(count)
        self.mean = np.zeros(dim) if mean is None else \
            np.array(mean, dtype=np.float64)
        self.var = np.ones(dim) if var is None else \
            np.array(var, dtype=np.float64)
        self.clip = float(clip)
        if self.mean.shape != (dim,) or self.var.shape != (dim,):
            raise PpoException('Running norm statistics must have length %d'
                               % (dim))

    @property
    def dim(self):
        return self.mean.size

    def normalize(self, obs):
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape[-1] < self.dim:
            raise PpoException('Observation too short: expect at least %d, '
                               'got %d' % (self.dim, obs.shape[-1]))
        out = obs.copy()
        out[..., :self.dim] = np.clip(
            (obs[..., :self.dim] - self.mean) /
            np.sqrt(self.var + NORM_EPSILON), -self.clip, self.clip)
        return out

    def __eq__(self, other):
        return isinstance(other, RunningNorm) and \
            self.count == other.count and self.clip == other.clip and \
            np.array_equal(self.mean, other.mean) and \
            np.array_equal(self.var, other.var)


def update_running_norm(norm, batch):
    """Merge a batch of raw observations into the running statistics.

    Chan's parallel update of count, mean and population variance. Trailing
    columns beyond ``norm.dim`` are ignored.

    Returns:
        :class:`RunningNorm`: the updated statistics; ``norm`` is unchanged.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.shape[0] == 0:
        return norm
    if not np.all(np.isfinite(batch)):
        raise PpoException('Non-finite observation in normalization batch')
    x = batch[:, :norm.dim]
    n = float(x.shape[0])
    batch_mean = x.mean(axis=0)
    batch_var = x.var(axis=0)

    total = norm.count + n
    delta = batch_mean - norm.mean
    mean = norm.mean + delta * n / total
    m2 = norm.var * norm.count + batch_var * n + \
        delta * delta * norm.count * n / total
    return RunningNorm(norm.dim, total, mean, m2 / total, norm.clip)


def augment_observation(obs, clock):
    """Append the phase channel of ``clock`` to a raw observation.

    Without a clock the observation is returned as is.
    """
    obs = np.asarray(obs, dtype=np.float64)
    if clock is None:
        return obs
    return np.concatenate([obs, [clock.observation()]])


def log_prob(mean, log_std, action):
    """Log density of a diagonal Gaussian, summed over the last axis."""
    z = (action - mean) * np.exp(-log_std)
    return np.sum(-0.5 * z * z - log_std - 0.5 * LOG_2PI, axis=-1)


def entropy(log_std):
    return float(np.sum(log_std + 0.5 + 0.5 * LOG_2PI))


def act(params, norm_obs, mode=SAMPLE, rng=None):
    """Query the policy.

    Args:
        params (:class:`PolicyParams`): the learner.
        norm_obs (ndarray): normalized observation, or a batch of them.
        mode (str): ``'sample'`` or ``'deterministic'``.
        rng (numpy.random.Generator): required in sample mode.

    Returns:
        tuple: ``(action head, log_prob, value)``; for a batch each entry has
        one row (or element) per observation.

    Raises:
        PpoException: for an unknown mode, a missing rng or non-finite
          network output.
    """
    mean = forward(params.pi_net, norm_obs)
    value = forward(params.v_net, norm_obs)[..., 0]
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(value))):
        raise PpoException('Non-finite policy output')

    if mode == DETERMINISTIC:
        head = mean
    elif mode == SAMPLE:
        if rng is None:
            raise PpoException('Sampling needs an rng')
        head = mean + np.exp(params.log_std) * \
            rng.standard_normal(size=mean.shape)
    else:
        raise PpoException('Unknown action mode: %r' % (mode))
    return head, log_prob(mean, params.log_std, head), value


def split_action_head(head, a_l, a_full):
    """Split a head into its clipped latent part and its residual part.

    >>> split_action_head(np.array([1.7, 0.2, 0.3, 0.4, 0.5]), 2, 3)[0]
    array([1. , 0.2])
    """
    head = np.asarray(head, dtype=np.float64)
    if head.shape[-1] != a_l + a_full:
        raise PpoException('Action head length mismatch: expect %d, got %d' %
                           (a_l + a_full, head.shape[-1]))
    return np.clip(head[..., :a_l], -1.0, 1.0), head[..., a_l:]


def compose_head(head, prior, low=-1.0, high=1.0):
    """Turn an action head into the action applied to the environment.

    Returns:
        tuple: ``(applied action, decoded contribution, residual
        contribution)``. The contributions are the weighted terms
        ``(1 - w) a_hat`` and ``w a_res`` before clipping; without a prior the
        whole head is residual.
    """
    if prior is None:
        head = np.asarray(head, dtype=np.float64)
        return np.clip(head, low, high), np.zeros_like(head), head
    latent, residual = split_action_head(head, prior.latent_dim,
                                         prior.action_dim)
    decoded = decode(prior, latent)
    w = prior.full_action_weight
    applied = compose_action(decoded, residual, w, low, high)
    return applied, (1.0 - w) * decoded, w * residual


class Policy(object):
    """A trained learner together with everything needed to run it.

    * params (:class:`PolicyParams`)
    * norm (:class:`RunningNorm`)
    * prior (:class:`gaitprior.prior.LatentActionPrior` or None): frozen
      decoder and full-action weight.
    * demo (:class:`gaitprior.demo.Demonstration` or None): phase length and
      expert pose table; its presence adds the phase channel.
    """

    def __init__(self, params, norm, prior=None, demo=None):
        self.params = params
        self.norm = norm
        self.prior = prior
        self.demo = demo

    @property
    def n_phase_channels(self):
        return 0 if self.demo is None else 1

    def new_clock(self):
        """A fresh phase clock, or None without a demonstration."""
        if self.demo is None:
            return None
        return PhaseClock(self.demo.n_frames)

    def action(self, obs, clock, mode=DETERMINISTIC, rng=None):
        """Applied action for a raw observation."""
        norm_obs = self.norm.normalize(augment_observation(obs, clock))
        head, _, _ = act(self.params, norm_obs, mode, rng)
        return compose_head(head, self.prior)[0]
