"""Proximal policy optimization.

Rollouts are collected from ``n_envs`` environment instances stepped in a
fixed order, advantages come from generalized advantage estimation, and the
clipped surrogate objective is optimized by minibatch Adam. With a latent
action prior attached the sampled action head is decoded and composed before
it reaches the environment; with a demonstration attached every step also
earns a style reward and the observation carries the phase channel.
"""

import collections
import logging
import time

import numpy as np
import progressbar as pbar

from gaitprior.imitation import (RewardWeights, expert_pose_at, mix_rewards,
                                 phase_tick, style_reward, PhaseClock)
from gaitprior.nn import AdamState, adam_step, backward, clip_grad_norm, \
    forward
from gaitprior.policy import (PpoException, PolicyParams, RunningNorm, Policy,
                              act, augment_observation, compose_head, entropy,
                              log_prob, update_running_norm, SAMPLE,
                              DETERMINISTIC, DEFAULT_HIDDEN_SIZES)

logger = logging.getLogger('gaitprior.ppo')

ADAM_EPSILON = 1e-5
ADVANTAGE_EPSILON = 1e-8
EP_INFO_LEN = 100
"""Number of recent episodes averaged in the training log.
"""

LOG_FIELDS = ['update', 'env_steps', 'mean_task_return', 'mean_style_return',
              'ep_len_mean', 'mean_abs_decoded', 'mean_abs_residual',
              'policy_loss', 'value_loss', 'entropy', 'approx_kl',
              'clip_fraction', 'wall_seconds']
"""Columns of the per-update training log, in order.
"""


class PpoConfig(object):
    """Learner hyperparameters.

    Every key of ``DEFAULTS`` may be passed as a keyword argument.

    Raises:
        PpoException: for an unknown key or an out-of-range value.
    """

    DEFAULTS = collections.OrderedDict([
        ('lr', 3e-4),
        ('gamma', 0.99),
        ('gae_lambda', 0.95),
        ('clip_range', 0.2),
        ('n_epochs', 10),
        ('minibatch_size', 64),
        ('vf_coef', 0.5),
        ('ent_coef', 0.0),
        ('max_grad_norm', 0.5),
        ('rollout_length', 2048),
        ('n_envs', 1),
        ('total_steps', 200000),
        ('seed', 0),
        ('hidden_sizes', DEFAULT_HIDDEN_SIZES),
        ('log_wall_time', False),
    ])

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.DEFAULTS)
        if len(unknown) > 0:
            raise PpoException('Unknown PPO option(s): %s' %
                               (', '.join(sorted(unknown))))
        for key, default in self.DEFAULTS.items():
            setattr(self, key, kwargs.get(key, default))
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        self._validate()

    def _validate(self):
        if self.lr < 0:
            raise PpoException('lr must be non-negative, got %r' % (self.lr))
        for key in ['gamma', 'gae_lambda']:
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise PpoException('%s must be in [0, 1], got %r' %
                                   (key, getattr(self, key)))
        if not 0.0 < self.clip_range < 1.0:
            raise PpoException('clip_range must be in (0, 1), got %r' %
                               (self.clip_range))
        for key in ['n_epochs', 'minibatch_size', 'rollout_length', 'n_envs',
                    'total_steps']:
            if int(getattr(self, key)) < 1:
                raise PpoException('%s must be positive, got %r' %
                                   (key, getattr(self, key)))
        for key in ['vf_coef', 'ent_coef', 'max_grad_norm']:
            if getattr(self, key) < 0:
                raise PpoException('%s must be non-negative, got %r' %
                                   (key, getattr(self, key)))
        if len(self.hidden_sizes) < 1 or min(self.hidden_sizes) < 1:
            raise PpoException('hidden_sizes must be positive, got %r' %
                               (self.hidden_sizes,))

    @property
    def steps_per_update(self):
        return self.rollout_length * self.n_envs

    @property
    def n_updates(self):
        return -(-self.total_steps // self.steps_per_update)

    def as_dict(self):
        return collections.OrderedDict(
            (key, getattr(self, key)) for key in self.DEFAULTS)

    def __repr__(self):
        return 'PpoConfig(%s)' % (', '.join(
            '%s=%r' % (k, v) for k, v in self.as_dict().items()))


class RolloutBuffer(object):
    """Fixed-size store of one rollout.

    Arrays are shaped ``(capacity, n_envs, ...)``; row ``t`` holds the
    normalized observation the policy acted on, the sampled action head, its
    log probability and value estimate, the mixed reward, and whether the
    observation starts a new episode.
    """

    def __init__(self, capacity, n_envs, obs_dim, head_dim):
        self.capacity = capacity
        self.n_envs = n_envs
        self.observations = np.zeros((capacity, n_envs, obs_dim))
        self.actions = np.zeros((capacity, n_envs, head_dim))
        self.log_probs = np.zeros((capacity, n_envs))
        self.values = np.zeros((capacity, n_envs))
        self.rewards = np.zeros((capacity, n_envs))
        self.episode_starts = np.zeros((capacity, n_envs))
        self.advantages = np.zeros((capacity, n_envs))
        self.returns = np.zeros((capacity, n_envs))
        self.pos = 0

    @property
    def full(self):
        return self.pos == self.capacity

    def add(self, observations, actions, log_probs, values, rewards,
            episode_starts):
        if self.full:
            raise PpoException('Rollout buffer is full (%d steps)' %
                               (self.capacity))
        t = self.pos
        self.observations[t] = observations
        self.actions[t] = actions
        self.log_probs[t] = log_probs
        self.values[t] = values
        self.rewards[t] = rewards
        self.episode_starts[t] = episode_starts
        self.pos += 1

    def flat(self, name):
        """Array ``name`` with the time and env axes merged."""
        arr = getattr(self, name)
        return arr.reshape((self.capacity * self.n_envs,) + arr.shape[2:])


def compute_gae(buffer, last_value, gamma, gae_lambda,
                last_episode_start=False):
    """Generalized advantage estimation over a full buffer.

    ``buffer.episode_starts[t + 1]`` marks that step ``t`` ended its episode;
    ``last_episode_start`` plays that role for the final step. Truncated
    episodes are expected to carry their bootstrap value in the reward.

    Args:
        buffer (:class:`RolloutBuffer`): the rollout.
        last_value (float or ndarray): value of the observation following the
          final step, one per environment.
        gamma (float): discount.
        gae_lambda (float): GAE mixing factor.
        last_episode_start (bool or ndarray): whether the final step ended an
          episode, one per environment.

    Returns:
        tuple: ``(advantages, returns)``, also stored on the buffer.
    """
    if not buffer.full:
        raise PpoException('GAE needs a full buffer, got %d of %d steps' %
                           (buffer.pos, buffer.capacity))
    shape = buffer.values.shape[1:]
    last_value = np.broadcast_to(np.asarray(last_value, dtype=np.float64),
                                 shape)
    last_done = np.broadcast_to(
        np.asarray(last_episode_start, dtype=np.float64), shape)

    advantages = np.zeros_like(buffer.values)
    last_gae = np.zeros(shape)
    for t in reversed(range(buffer.capacity)):
        if t == buffer.capacity - 1:
            non_terminal = 1.0 - last_done
            next_values = last_value
        else:
            non_terminal = 1.0 - buffer.episode_starts[t + 1]
            next_values = buffer.values[t + 1]
        delta = buffer.rewards[t] + gamma * next_values * non_terminal - \
            buffer.values[t]
        last_gae = delta + gamma * gae_lambda * non_terminal * last_gae
        advantages[t] = last_gae

    buffer.advantages = advantages
    buffer.returns = advantages + buffer.values
    return buffer.advantages, buffer.returns


def _minibatch_loss(params, obs, actions, old_log_probs, advantages, returns,
                    config):
    mean = forward(params.pi_net, obs)
    values = forward(params.v_net, obs)[:, 0]
    log_std = params.log_std
    m = obs.shape[0]

    if m > 1:
        advantages = (advantages - advantages.mean()) / \
            (advantages.std() + ADVANTAGE_EPSILON)

    new_log_probs = log_prob(mean, log_std, actions)
    log_ratio = new_log_probs - old_log_probs
    ratio = np.exp(log_ratio)
    surr1 = ratio * advantages
    surr2 = np.clip(ratio, 1.0 - config.clip_range,
                    1.0 + config.clip_range) * advantages
    policy_loss = -float(np.mean(np.minimum(surr1, surr2)))
    value_loss = float(np.mean((returns - values) ** 2))
    ent = entropy(log_std)
    loss = policy_loss + config.vf_coef * value_loss - config.ent_coef * ent

    # only the unclipped branch carries gradient
    d_log_prob = -np.where(surr1 <= surr2, ratio * advantages, 0.0) / m
    inv_var = np.exp(-2.0 * log_std)
    diff = actions - mean
    d_mean = d_log_prob[:, None] * diff * inv_var
    d_log_std = np.sum(d_log_prob[:, None] * (diff * diff * inv_var - 1.0),
                       axis=0) - config.ent_coef
    d_value = config.vf_coef * 2.0 * (values - returns) / m

    grads = backward(params.pi_net, obs, d_mean).arrays() + \
        backward(params.v_net, obs, d_value[:, None]).arrays() + [d_log_std]
    stats = {
        'policy_loss': policy_loss,
        'value_loss': value_loss,
        'entropy': ent,
        'approx_kl': float(np.mean((ratio - 1.0) - log_ratio)),
        'clip_fraction': float(np.mean(np.abs(ratio - 1.0) >
                                       config.clip_range)),
    }
    return loss, grads, stats


def ppo_update(params, buffer, config, adam_state, rng, update=0):
    """``n_epochs`` passes of minibatch Adam over the rollout.

    Args:
        params (:class:`gaitprior.policy.PolicyParams`): current learner.
        buffer (:class:`RolloutBuffer`): rollout with advantages computed.
        config (:class:`PpoConfig`): hyperparameters.
        adam_state (:class:`gaitprior.nn.AdamState`): optimizer moments.
        rng (numpy.random.Generator): shuffles the minibatches.
        update (int): update index, only used in error messages.

    Returns:
        tuple: ``(params, adam_state, stats)`` where ``stats`` averages
        ``policy_loss``, ``value_loss``, ``entropy``, ``approx_kl`` and
        ``clip_fraction`` over all minibatches.

    Raises:
        PpoException: if a minibatch loss becomes non-finite.
    """
    obs = buffer.flat('observations')
    actions = buffer.flat('actions')
    old_log_probs = buffer.flat('log_probs')
    advantages = buffer.flat('advantages')
    returns = buffer.flat('returns')
    n = obs.shape[0]
    names = params.parameter_names()

    totals = collections.OrderedDict(
        (k, 0.0) for k in ['policy_loss', 'value_loss', 'entropy', 'approx_kl',
                           'clip_fraction'])
    n_minibatches = 0
    last_stats = None
    for epoch in range(config.n_epochs):
        order = rng.permutation(n)
        for k, start in enumerate(range(0, n, config.minibatch_size)):
            idx = order[start:start + config.minibatch_size]
            loss, grads, stats = _minibatch_loss(
                params, obs[idx], actions[idx], old_log_probs[idx],
                advantages[idx], returns[idx], config)
            if not np.isfinite(loss):
                raise PpoException('Non-finite loss at update %d, epoch %d, '
                                   'minibatch %d (last stats: %s)' %
                                   (update, epoch, k, last_stats))
            grads, _ = clip_grad_norm(grads, config.max_grad_norm)
            new_params, adam_state = adam_step(params.parameters(), grads,
                                               adam_state, names)
            params = params.with_parameters(new_params)
            for key in totals:
                totals[key] += stats[key]
            n_minibatches += 1
            last_stats = stats

    return params, adam_state, collections.OrderedDict(
        (k, v / n_minibatches) for k, v in totals.items())


class TrainResult(object):
    """Outcome of :func:`train`.

    * policy (:class:`gaitprior.policy.Policy`): the final learner.
    * log (list of OrderedDict): one row per update, keys ``LOG_FIELDS``.
    """

    def __init__(self, policy, log):
        self.policy = policy
        self.log = log


def _check_dims(spec, prior, demo):
    if prior is not None and prior.action_dim != spec.action_dim:
        raise PpoException('Prior decodes %d actions, %s has %d' %
                           (prior.action_dim, spec.id, spec.action_dim))
    if demo is not None:
        if demo.action_dim != spec.action_dim:
            raise PpoException('Demonstration has %d actions, %s has %d' %
                               (demo.action_dim, spec.id, spec.action_dim))
        if demo.pose_dim != spec.pose_dim:
            raise PpoException('Demonstration has %d pose features, %s has %d'
                               % (demo.pose_dim, spec.id, spec.pose_dim))


def _mean(values):
    return float(np.mean(values)) if len(values) > 0 else float('nan')


def train(env_factory, config, prior=None, demo=None, weights=None,
          verbose=False):
    """Train a policy from scratch.

    Args:
        env_factory (callable): maps a seed to a fresh environment instance.
        config (:class:`PpoConfig`): hyperparameters, including the seed.
        prior (:class:`gaitprior.prior.LatentActionPrior`): frozen prior; the
          action head becomes ``a_l + a_full`` long when given.
        demo (:class:`gaitprior.demo.Demonstration`): enables the phase
          channel and the style reward.
        weights (:class:`gaitprior.imitation.RewardWeights`): reward mix,
          task only if omitted.
        verbose (bool): show a progress bar.

    Returns:
        :class:`TrainResult`

    Raises:
        PpoException: on inconsistent dimensions, or a non-finite loss.
    """
    weights = weights if weights is not None else RewardWeights.task_only()
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_envs + 1)
    rng = np.random.default_rng(seeds[0])
    envs = [env_factory(s) for s in seeds[1:]]
    spec = envs[0].spec
    _check_dims(spec, prior, demo)

    head_dim = spec.action_dim + (prior.latent_dim if prior is not None else 0)
    obs_dim = spec.obs_dim + (1 if demo is not None else 0)
    params = PolicyParams.init(obs_dim, head_dim, rng, config.hidden_sizes)
    adam_state = AdamState.for_parameters(params.parameters(), lr=config.lr,
                                          epsilon=ADAM_EPSILON)
    norm = RunningNorm(spec.obs_dim)
    logger.info('Training on %s: obs %d, head %d, %d updates, %r, prior %r',
                spec.id, obs_dim, head_dim, config.n_updates, weights, prior)

    def new_clock():
        return PhaseClock(demo.n_frames) if demo is not None else None

    raw_obs = np.array([env.reset() for env in envs])
    norm = update_running_norm(norm, raw_obs)
    clocks = [new_clock() for _ in envs]
    episode_starts = np.ones(config.n_envs)
    ep_task = np.zeros(config.n_envs)
    ep_style = np.zeros(config.n_envs)
    ep_len = np.zeros(config.n_envs, dtype=int)
    ep_info = collections.deque(maxlen=EP_INFO_LEN)

    bar = None
    if verbose:
        widgets = [pbar.Percentage(), pbar.Bar(), pbar.ETA()]
        bar = pbar.ProgressBar(widgets=widgets, maxval=config.n_updates)
        bar.start()

    start_time = time.time()
    log = []
    env_steps = 0
    for update in range(1, config.n_updates + 1):
        buffer = RolloutBuffer(config.rollout_length, config.n_envs, obs_dim,
                               head_dim)
        abs_decoded = 0.0
        abs_residual = 0.0
        finished = 0
        for _ in range(config.rollout_length):
            norm_obs = norm.normalize(np.array(
                [augment_observation(o, c) for o, c in zip(raw_obs, clocks)]))
            heads, log_probs, values = act(params, norm_obs, SAMPLE, rng)
            rewards = np.zeros(config.n_envs)
            dones = np.zeros(config.n_envs)
            for i, env in enumerate(envs):
                applied, decoded, residual = compose_head(heads[i], prior)
                abs_decoded += float(np.sum(np.abs(decoded)))
                abs_residual += float(np.sum(np.abs(residual)))
                tr = env.step(applied)
                if tr.error:
                    logger.warning('Non-finite state in %s, episode '
                                   'terminated after %d steps', spec.id,
                                   ep_len[i] + 1)

                r_style = 0.0
                if demo is not None:
                    expert = expert_pose_at(demo, clocks[i].value())
                    r_style = style_reward(tr.pose, expert,
                                           spec.angular_pose_indices)
                    clocks[i] = phase_tick(clocks[i])
                reward = mix_rewards(tr.task_reward, r_style, weights)
                ep_task[i] += tr.task_reward
                ep_style[i] += r_style
                ep_len[i] += 1

                if tr.truncated:
                    terminal = norm.normalize(
                        augment_observation(tr.observation, clocks[i]))
                    _, _, terminal_value = act(params, terminal,
                                               DETERMINISTIC)
                    reward += config.gamma * float(terminal_value)

                if tr.done:
                    ep_info.append((ep_task[i], ep_style[i], ep_len[i]))
                    finished += 1
                    ep_task[i], ep_style[i], ep_len[i] = 0.0, 0.0, 0
                    raw_obs[i] = env.reset()
                    clocks[i] = new_clock()
                else:
                    raw_obs[i] = tr.observation
                rewards[i] = reward
                dones[i] = float(tr.done)

            buffer.add(norm_obs, heads, log_probs, values, rewards,
                       episode_starts)
            episode_starts = dones
            norm = update_running_norm(norm, raw_obs)
            env_steps += config.n_envs

        if finished == 0:
            logger.warning('No episode finished during update %d', update)

        norm_obs = norm.normalize(np.array(
            [augment_observation(o, c) for o, c in zip(raw_obs, clocks)]))
        _, _, last_values = act(params, norm_obs, DETERMINISTIC)
        compute_gae(buffer, last_values, config.gamma, config.gae_lambda,
                    episode_starts)
        params, adam_state, stats = ppo_update(params, buffer, config,
                                               adam_state, rng, update)

        n_components = config.steps_per_update * spec.action_dim
        row = collections.OrderedDict([
            ('update', update),
            ('env_steps', env_steps),
            ('mean_task_return', _mean([e[0] for e in ep_info])),
            ('mean_style_return', _mean([e[1] for e in ep_info])),
            ('ep_len_mean', _mean([e[2] for e in ep_info])),
            ('mean_abs_decoded', abs_decoded / n_components),
            ('mean_abs_residual', abs_residual / n_components),
        ])
        row.update(stats)
        row['wall_seconds'] = time.time() - start_time \
            if config.log_wall_time else 0.0
        log.append(row)
        logger.debug('Update %d: %s', update, ', '.join(
            '%s=%.4g' % (k, v) for k, v in row.items()))
        if bar is not None:
            bar.update(update)

    if bar is not None:
        bar.finish()

    return TrainResult(Policy(params, norm, prior, demo), log)


class EpisodeResult(object):

    def __init__(self, task_return, style_return, length):
        self.task_return = task_return
        self.style_return = style_return
        self.length = length


def evaluate(policy, env, episodes=10, deterministic=True, seed=0):
    """Run ``episodes`` episodes of a trained policy.

    Episode ``k`` resets ``env`` with seed ``seed + k``. The running
    normalization is frozen. Task and style returns are reported separately.

    Returns:
        list of :class:`EpisodeResult`

    Raises:
        PpoException: if ``episodes`` is not positive.
    """
    if episodes < 1:
        raise PpoException('Number of evaluation episodes must be positive, '
                           'got %d' % (episodes))
    mode = DETERMINISTIC if deterministic else SAMPLE
    rng = np.random.default_rng(seed)
    spec = env.spec
    results = []
    for k in range(episodes):
        obs = env.reset(seed=seed + k)
        clock = policy.new_clock()
        task, style, length = 0.0, 0.0, 0
        while True:
            action = policy.action(obs, clock, mode, rng)
            tr = env.step(action)
            task += tr.task_reward
            if clock is not None:
                style += style_reward(tr.pose, expert_pose_at(
                    policy.demo, clock.value()), spec.angular_pose_indices)
                clock = phase_tick(clock)
            length += 1
            if tr.done:
                break
            obs = tr.observation
        results.append(EpisodeResult(task, style, length))
    return results
