import os
import sys

import numpy as np
import pytest

TEST_ROOT = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.dirname(TEST_ROOT)
TEST_INPUT_DIR = os.path.join(TEST_ROOT, 'testing_inputs')

sys.path.insert(0, PROJECT_ROOT)

from gaitprior import ppo
from gaitprior.common import EnvSpec, LocomotionEnv
from gaitprior.demo import load_demonstration
from gaitprior.envs import make_env
from gaitprior.imitation import RewardWeights
from gaitprior.nn import AdamState, Mlp, forward
from gaitprior.policy import (PolicyParams, PpoException, DETERMINISTIC,
                              log_prob)
from gaitprior.prior import LatentActionPrior

BANDIT_SPEC = EnvSpec('bandit', obs_dim=1, action_dim=1, dt=1.0,
                      max_episode_steps=1, pose_names=['a'])


class BanditEnv(LocomotionEnv):
    """One-step task rewarding actions close to 0.5."""

    @property
    def spec(self):
        return BANDIT_SPEC

    def _reset_state(self):
        self.last = 0.0

    def _advance(self, action):
        self.last = float(action[0])
        return 0.0

    def _observe(self):
        return np.ones(1)

    def _pose(self):
        return np.array([self.last])

    def _fallen(self):
        return True

    def _task_reward(self, speed, action):
        return -(action[0] - 0.5) ** 2


def point_gait_factory(seed):
    return make_env('point_gait', seed=seed)


def small_config(**kwargs):
    values = dict(total_steps=1024, rollout_length=512, minibatch_size=128,
                  n_epochs=2, hidden_sizes=(8, 8), seed=0)
    values.update(kwargs)
    return ppo.PpoConfig(**values)


def make_prior(w_full, seed):
    rng = np.random.default_rng(seed)
    return LatentActionPrior(Mlp.init([4, 4, 2], rng),
                             Mlp.init([2, 4, 4], rng), w_full)


def same_logs(a, b):
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        if list(ra) != list(rb):
            return False
        if not np.array_equal(np.array(list(ra.values()), dtype=float),
                              np.array(list(rb.values()), dtype=float),
                              equal_nan=True):
            return False
    return True


def filled_buffer(rewards, values, dones):
    t = len(rewards)
    buffer = ppo.RolloutBuffer(t, 1, 1, 1)
    starts = [1.0] + list(dones[:-1])
    for k in range(t):
        buffer.add([0.0], [0.0], 0.0, values[k], rewards[k], starts[k])
    return buffer


def gae_oracle(rewards, values, dones, last_value, gamma, lam):
    t_max = len(rewards)
    advantages = []
    for t in range(t_max):
        adv, coef = 0.0, 1.0
        for k in range(t, t_max):
            next_value = last_value if k == t_max - 1 else values[k + 1]
            delta = rewards[k] + gamma * next_value * (1 - dones[k]) - \
                values[k]
            adv += coef * delta
            if dones[k]:
                break
            coef *= gamma * lam
        advantages.append(adv)
    return np.array(advantages)


def test_gae_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = int(rng.integers(1, 11))
        rewards = rng.normal(size=t)
        values = rng.normal(size=t)
        dones = (rng.random(t) < 0.3).astype(float)
        last_value = float(rng.normal())
        gamma, lam = rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0)

        buffer = filled_buffer(rewards, values, dones)
        advantages, returns = ppo.compute_gae(buffer, last_value, gamma, lam,
                                              dones[-1])
        expected = gae_oracle(rewards, values, dones, last_value, gamma, lam)
        assert np.max(np.abs(advantages[:, 0] - expected)) <= 1e-10
        assert np.allclose(returns[:, 0], expected + values, atol=1e-10)


def test_gae_examples():
    buffer = filled_buffer([1.0, 1.0], [0.0, 0.0], [0.0, 0.0])
    advantages, _ = ppo.compute_gae(buffer, 0.0, 1.0, 1.0)
    assert advantages[:, 0].tolist() == [2.0, 1.0]

    buffer = filled_buffer([1.0, -2.0, 0.5], [0.3, 0.1, 0.2], [0.0] * 3)
    advantages, _ = ppo.compute_gae(buffer, 9.0, 0.0, 0.95)
    assert advantages[:, 0] == pytest.approx([0.7, -2.1, 0.3])


def test_gae_needs_full_buffer():
    buffer = ppo.RolloutBuffer(3, 1, 1, 1)
    buffer.add([0.0], [0.0], 0.0, 0.0, 1.0, 1.0)
    with pytest.raises(PpoException):
        ppo.compute_gae(buffer, 0.0, 0.99, 0.95)
    buffer.add([0.0], [0.0], 0.0, 0.0, 1.0, 0.0)
    buffer.add([0.0], [0.0], 0.0, 0.0, 1.0, 0.0)
    with pytest.raises(PpoException):
        buffer.add([0.0], [0.0], 0.0, 0.0, 1.0, 0.0)


def random_rollout(params, n=64, seed=0):
    rng = np.random.default_rng(seed)
    buffer = ppo.RolloutBuffer(n, 1, params.obs_dim, params.head_dim)
    for _ in range(n):
        obs = rng.normal(size=(1, params.obs_dim))
        action = rng.normal(size=(1, params.head_dim))
        mean = forward(params.pi_net, obs)
        buffer.add(obs, action, log_prob(mean, params.log_std, action),
                   forward(params.v_net, obs)[:, 0], rng.normal(size=1),
                   [0.0])
    ppo.compute_gae(buffer, 0.0, 0.99, 0.95)
    return buffer


def test_first_minibatch_ratio_is_one():
    params = PolicyParams.init(3, 2, np.random.default_rng(0), (8,))
    buffer = random_rollout(params)
    config = ppo.PpoConfig()
    _, _, stats = ppo._minibatch_loss(
        params, buffer.flat('observations'), buffer.flat('actions'),
        buffer.flat('log_probs'), buffer.flat('advantages'),
        buffer.flat('returns'), config)
    assert stats['approx_kl'] == pytest.approx(0.0, abs=1e-9)
    assert stats['clip_fraction'] == 0.0
    assert stats['entropy'] == pytest.approx(2 * (0.5 + 0.5 *
                                                  np.log(2 * np.pi)))


def test_zero_learning_rate():
    params = PolicyParams.init(3, 2, np.random.default_rng(0), (8,))
    buffer = random_rollout(params)
    config = ppo.PpoConfig(lr=0.0, minibatch_size=16, n_epochs=3)
    state = AdamState.for_parameters(params.parameters(), lr=0.0)
    new_params, state, stats = ppo.ppo_update(params, buffer, config, state,
                                              np.random.default_rng(1))
    assert new_params == params
    assert state.step_count == 3 * 4
    assert stats['approx_kl'] == pytest.approx(0.0, abs=1e-9)


def test_update_changes_parameters():
    params = PolicyParams.init(3, 2, np.random.default_rng(0), (8,))
    buffer = random_rollout(params)
    state = AdamState.for_parameters(params.parameters(), lr=1e-3)
    new_params, _, stats = ppo.ppo_update(params, buffer, ppo.PpoConfig(),
                                          state, np.random.default_rng(1))
    assert new_params != params
    assert set(stats) == set(['policy_loss', 'value_loss', 'entropy',
                              'approx_kl', 'clip_fraction'])


def test_config():
    config = ppo.PpoConfig(total_steps=1000, rollout_length=300)
    assert config.n_updates == 4
    assert config.steps_per_update == 300
    assert ppo.PpoConfig(n_envs=2, rollout_length=10,
                         total_steps=20).n_updates == 1
    assert ppo.PpoConfig().as_dict()['clip_range'] == 0.2

    with pytest.raises(PpoException):
        ppo.PpoConfig(learning_rate=1.0)
    with pytest.raises(PpoException):
        ppo.PpoConfig(gamma=1.5)
    with pytest.raises(PpoException):
        ppo.PpoConfig(minibatch_size=0)
    with pytest.raises(PpoException):
        ppo.PpoConfig(clip_range=0.0)


def test_bandit():
    config = ppo.PpoConfig(rollout_length=256, total_steps=256 * 50, lr=1e-3,
                           hidden_sizes=(16,), seed=0)
    result = ppo.train(lambda seed: BanditEnv(seed=seed), config)
    assert len(result.log) == 50
    action = result.policy.action(np.ones(1), None, DETERMINISTIC)
    assert abs(action[0] - 0.5) < 0.1
    assert result.log[-1]['mean_task_return'] > result.log[0][
        'mean_task_return']
    assert result.log[-1]['ep_len_mean'] == 1.0


def test_train_deterministic():
    demo = load_demonstration(os.path.join(TEST_INPUT_DIR, 'demo.json'))
    weights = RewardWeights(0.67, 0.33)
    a = ppo.train(point_gait_factory, small_config(), make_prior(0.3, 0), demo,
                  weights)
    b = ppo.train(point_gait_factory, small_config(), make_prior(0.3, 0), demo,
                  weights)
    c = ppo.train(point_gait_factory, small_config(seed=1),
                  make_prior(0.3, 0), demo, weights)
    assert same_logs(a.log, b.log)
    assert a.policy.params == b.policy.params
    assert a.policy.norm == b.policy.norm
    assert not same_logs(a.log, c.log)

    assert [list(row) for row in a.log] == [ppo.LOG_FIELDS] * 2
    assert [row['env_steps'] for row in a.log] == [512, 1024]
    assert all(row['wall_seconds'] == 0.0 for row in a.log)
    assert np.isfinite(a.log[-1]['mean_task_return'])
    assert 0.0 < a.log[-1]['mean_style_return']


def test_full_weight_ignores_decoder():
    a = ppo.train(point_gait_factory, small_config(), make_prior(1.0, 0))
    b = ppo.train(point_gait_factory, small_config(), make_prior(1.0, 1))
    assert same_logs(a.log, b.log)
    assert a.policy.params == b.policy.params
    assert all(row['mean_abs_decoded'] == 0.0 for row in a.log)
    assert all(row['mean_abs_residual'] > 0.0 for row in a.log)


def test_action_head_sizes():
    demo = load_demonstration(os.path.join(TEST_INPUT_DIR, 'demo.json'))
    config = small_config(total_steps=512)
    plain = ppo.train(point_gait_factory, config)
    assert plain.policy.params.head_dim == 4
    assert plain.policy.params.obs_dim == 5
    assert all(row['mean_abs_decoded'] == 0.0 for row in plain.log)

    latent = ppo.train(point_gait_factory, config, make_prior(0.1, 0), demo)
    assert latent.policy.params.head_dim == 6
    assert latent.policy.params.obs_dim == 6
    assert latent.log[0]['mean_abs_decoded'] > 0.0


def test_multiple_envs():
    result = ppo.train(point_gait_factory,
                       small_config(n_envs=2, rollout_length=256))
    assert [row['env_steps'] for row in result.log] == [512, 1024]


def test_dimension_mismatch():
    rng = np.random.default_rng(0)
    wide = LatentActionPrior(Mlp.init([6, 4, 2], rng),
                             Mlp.init([2, 4, 6], rng))
    with pytest.raises(PpoException):
        ppo.train(point_gait_factory, small_config(), wide)


def test_evaluate():
    policy = ppo.train(point_gait_factory, small_config(total_steps=512)) \
        .policy
    env = make_env('point_gait')
    a = ppo.evaluate(policy, env, episodes=2, seed=5)
    b = ppo.evaluate(policy, env, episodes=2, seed=5)
    assert [r.task_return for r in a] == [r.task_return for r in b]
    assert [r.length for r in a] == [500, 500]
    assert all(r.style_return == 0.0 for r in a)

    with pytest.raises(PpoException):
        ppo.evaluate(policy, env, episodes=0)


def test_minibatch_standardizes_advantages():
    params = PolicyParams.init(3, 2, np.random.default_rng(0), (8,))
    buffer = random_rollout(params)
    config = ppo.PpoConfig()
    adv = buffer.flat('advantages')

    def loss_with(advantages):
        return ppo._minibatch_loss(
            params, buffer.flat('observations'), buffer.flat('actions'),
            buffer.flat('log_probs'), advantages, buffer.flat('returns'),
            config)

    loss, grads, stats = loss_with(adv)
    # ratio is one, so the policy loss is minus the mean advantage used
    assert stats['policy_loss'] == pytest.approx(0.0, abs=1e-9)

    standardized = (adv - adv.mean()) / adv.std()
    for other in [standardized, 3.0 * adv + 5.0]:
        other_loss, other_grads, _ = loss_with(other)
        assert other_loss == pytest.approx(loss, rel=1e-6, abs=1e-9)
        for a, b in zip(grads, other_grads):
            assert a == pytest.approx(b, rel=1e-6, abs=1e-9)
