"""Style reward against a single demonstrated gait cycle.

A phase clock replays the demonstration frames throughout an episode so the
expert pose at every step is a function of the step count alone; together
with the phase observation this keeps the reward Markovian.
"""

import numpy as np

from gaitprior.common import GaitPriorException
from gaitprior import utils


class ImitationException(GaitPriorException):
    pass


DEFAULT_TASK_WEIGHT = 0.67
DEFAULT_STYLE_WEIGHT = 0.33


class PhaseClock(object):
    """Cyclic frame counter over a demonstration of ``n_frames`` frames.

    >>> clock = PhaseClock(5)
    >>> for _ in range(7):
    ...     clock = phase_tick(clock)
    >>> phase_value(clock)
    2
    """

    def __init__(self, n_frames, t=0):
        if n_frames < 1:
            raise ImitationException('Phase clock needs at least one frame, '
                                     'got %d' % (n_frames))
        self.n_frames = int(n_frames)
        self.t = int(t)

    def value(self):
        return self.t % self.n_frames

    def observation(self):
        """Phase as a fraction of the cycle, in ``[0, 1)``."""
        return self.value() / float(self.n_frames)

    def reset(self):
        return PhaseClock(self.n_frames)


def phase_tick(clock):
    return PhaseClock(clock.n_frames, clock.t + 1)


def phase_value(clock):
    return clock.value()


class RewardWeights(object):
    """Weights of the task and style reward terms.

    The defaults blend both terms; :meth:`task_only` disables the style term.
    """

    def __init__(self, w_task=DEFAULT_TASK_WEIGHT,
                 w_style=DEFAULT_STYLE_WEIGHT):
        if w_task < 0 or w_style < 0:
            raise ImitationException('Reward weights must be non-negative, '
                                     'got (%r, %r)' % (w_task, w_style))
        self.w_task = float(w_task)
        self.w_style = float(w_style)

    @classmethod
    def task_only(cls):
        return cls(1.0, 0.0)

    def __repr__(self):
        return 'RewardWeights(w_task=%g, w_style=%g)' % (self.w_task,
                                                         self.w_style)


def expert_pose_at(demo, phase):
    """Expert pose features of frame ``phase``."""
    if not 0 <= phase < demo.n_frames:
        raise ImitationException('Phase %d out of range [0, %d)' %
                                 (phase, demo.n_frames))
    return demo.pose(phase)


def style_reward(pose, expert, angular_indices=()):
    """``exp(-||q_exp - q||^2)``.

    Args:
        pose (ndarray): agent pose features.
        expert (ndarray): expert pose features at the current phase.
        angular_indices (tuple of int): entries that are angles; their
          difference is wrapped into ``(-pi, pi]`` before squaring.

    Returns:
        float: in ``(0, 1]``, exactly one for identical poses.
    """
    pose = np.asarray(pose, dtype=np.float64)
    expert = np.asarray(expert, dtype=np.float64)
    if pose.shape != expert.shape:
        raise ImitationException('Pose shape mismatch: %s vs %s' %
                                 (pose.shape, expert.shape))
    diff = expert - pose
    if len(angular_indices) > 0:
        idx = list(angular_indices)
        diff[idx] = utils.wrap_angle(diff[idx])
    return float(np.exp(-np.sum(diff * diff)))


def mix_rewards(r_task, r_style, weights):
    """Weighted sum of task and style reward.

    >>> round(mix_rewards(1.0, 1.0, RewardWeights()), 12)
    1.0

    >>> mix_rewards(0.5, 123.0, RewardWeights.task_only())
    0.5
    """
    if weights.w_style == 0.0:
        return weights.w_task * r_task
    return weights.w_task * r_task + weights.w_style * r_style
