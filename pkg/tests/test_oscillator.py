import math
import os
import sys

import numpy as np
import pytest

TEST_ROOT = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.dirname(TEST_ROOT)
TEST_INPUT_DIR = os.path.join(TEST_ROOT, 'testing_inputs')

sys.path.insert(0, PROJECT_ROOT)

from gaitprior import envs, hopper, oscillator
from gaitprior.common import EnvSpec, LocomotionEnv
from gaitprior.demo import actions_matrix
from gaitprior.synergy import compute_pca, suggest_latent_dim


def test_load_config():
    config = oscillator.load_oscillator_config(
        os.path.join(TEST_INPUT_DIR, 'oscillator.json'))
    assert config.frequency == 2.0
    assert config.action_dim == 4
    assert config.period == 0.5
    assert config.offsets.tolist() == [0.0] * 4


def test_save_load(tmpdir):
    config = oscillator.OscillatorConfig([0.3, 0.2], 1.5, [0.1, 1.0 / 3],
                                         [0.5, -0.1])
    path = str(tmpdir.join('osc.json'))
    oscillator.save_oscillator_config(config, path, 'point_gait')
    loaded = oscillator.load_oscillator_config(path)
    assert np.array_equal(loaded.amplitudes, config.amplitudes)
    assert np.array_equal(loaded.phase_offsets, config.phase_offsets)
    assert np.array_equal(loaded.offsets, config.offsets)
    assert loaded.frequency == config.frequency


def test_oscillator_action():
    config = oscillator.OscillatorConfig([0.5, 0.25], 1.0,
                                         [0.0, math.pi / 2], [0.1, 0.0])
    assert oscillator.oscillator_action(config, 0.0) == \
        pytest.approx([0.1, 0.25])
    assert oscillator.oscillator_action(config, 0.25) == \
        pytest.approx([0.6, 0.0], abs=1e-12)


def test_invalid_config():
    with pytest.raises(oscillator.OscillatorException):
        oscillator.OscillatorConfig([0.5, 0.5], 1.0, [0.0])
    with pytest.raises(oscillator.OscillatorException):
        oscillator.OscillatorConfig([0.5], 0.0, [0.0])
    with pytest.raises(oscillator.OscillatorException) as e:
        oscillator.OscillatorConfig([0.5, 0.8], 1.0, [0.0, 0.0], [0.0, 0.3])
    assert 'Actuator 1' in str(e.value)


def test_frames_per_cycle():
    env = envs.make_env('point_gait')
    config = oscillator.load_oscillator_config(
        os.path.join(TEST_INPUT_DIR, 'oscillator.json'))
    demo = oscillator.generate_demonstration(env, config, settle_cycles=2)
    assert demo.n_frames == 25
    assert demo.env_id == 'point_gait'
    assert demo.dt == 0.02

    # frame t holds the action of step t of the cycle
    actions = actions_matrix(demo)
    for t in [0, 7, 24]:
        assert actions[t] == pytest.approx(
            oscillator.oscillator_action(config, t * 0.02))


def test_periodic_actions():
    env = envs.make_env('point_gait')
    config = oscillator.default_oscillator_config('point_gait')
    one = oscillator.generate_demonstration(env, config, settle_cycles=3)
    two = oscillator.generate_demonstration(env, config, settle_cycles=3,
                                            capture_cycles=2)
    assert np.allclose(actions_matrix(one), actions_matrix(two), atol=1e-12)
    assert np.all(np.isfinite(two.poses_matrix()))


def test_deterministic():
    config = oscillator.default_oscillator_config('planar_hopper')
    a = oscillator.generate_demonstration(envs.make_env('planar_hopper'),
                                          config, settle_cycles=2, seed=3)
    b = oscillator.generate_demonstration(envs.make_env('planar_hopper'),
                                          config, settle_cycles=2, seed=3)
    assert a == b


def test_generation_errors():
    env = envs.make_env('point_gait')
    with pytest.raises(oscillator.OscillatorException):
        oscillator.generate_demonstration(
            env, oscillator.OscillatorConfig([0.5] * 3, 1.0, [0.0] * 3))
    with pytest.raises(oscillator.OscillatorException):
        oscillator.generate_demonstration(
            env, oscillator.OscillatorConfig([0.5] * 4, 3.0, [0.0] * 4))
    with pytest.raises(oscillator.OscillatorException):
        oscillator.generate_demonstration(
            env, oscillator.default_oscillator_config('point_gait'),
            capture_cycles=0)
    with pytest.raises(oscillator.OscillatorException):
        oscillator.default_oscillator_config('quadruped')


@pytest.mark.parametrize('env_id', envs.available_envs())
def test_shipped_experts(env_id):
    demo = envs.default_demonstration(env_id)
    spec = envs.make_env(env_id).spec
    assert demo.action_dim == spec.action_dim
    assert demo.pose_dim == spec.pose_dim
    assert demo.pose_names == spec.pose_names
    assert np.isfinite(demo.reference_speed)


def test_point_gait_synergies():
    demo = envs.default_demonstration('point_gait')
    pca = compute_pca(actions_matrix(demo))
    k = suggest_latent_dim(demo.action_dim)
    assert k == 2
    assert pca.cumulative[k - 1] >= 0.97


TOPPLE_SPEC = EnvSpec('topple', obs_dim=1, action_dim=1, dt=0.25,
                      max_episode_steps=100, pose_names=['t'])


class ToppleEnv(LocomotionEnv):
    """Falls over after six steps whatever the action."""

    @property
    def spec(self):
        return TOPPLE_SPEC

    def _reset_state(self):
        self.t = 0

    def _advance(self, action):
        self.t += 1
        return 1.0

    def _observe(self):
        return np.array([float(self.t)])

    def _pose(self):
        return np.array([float(self.t)])

    def _fallen(self):
        return self.t > 6

    def _task_reward(self, speed, action):
        return speed


def test_falling_expert():
    config = oscillator.OscillatorConfig([0.5], 1.0, [0.0])
    demo = oscillator.generate_demonstration(ToppleEnv(), config,
                                             settle_cycles=0)
    assert demo.n_frames == 4

    with pytest.raises(oscillator.OscillatorException) as e:
        oscillator.generate_demonstration(ToppleEnv(), config,
                                          settle_cycles=1)
    assert 'step 6' in str(e.value)


def test_hopper_expert_stays_up():
    env = envs.make_env('planar_hopper')
    config = oscillator.default_oscillator_config('planar_hopper')
    assert np.all(np.abs(config.amplitudes) + np.abs(config.offsets) <= 0.6)

    # raises if the expert falls at any step of the rollout
    demo = oscillator.generate_demonstration(env, config)
    assert demo.n_frames == 100
    assert demo.reference_speed > 0

    poses = demo.poses_matrix()
    assert np.all(poses[:, 0] > hopper.MIN_HEIGHT)
    assert np.all(np.abs(poses[:, 1]) < hopper.MAX_PITCH)
