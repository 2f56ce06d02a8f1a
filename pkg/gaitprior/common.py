"""Common interfaces.

Shared exception root, the fixed-layout binary header used by checkpoint
files, and the episodic environment abstraction every locomotion task builds
on.
"""

import abc
import struct

import numpy as np


class GaitPriorException(Exception):
    """Root of all errors raised by this package."""
    pass


class EnvException(GaitPriorException):
    pass


class GenericHeader(object):
    """Fixed-size little-endian record at the start of a binary file.

    Checkpoint files open with such a record (see
    :class:`gaitprior.checkpoint.CheckpointHeader`), followed by a
    variable-length JSON meta block and the raw float64 arrays it describes.
    Subclasses declare the layout through ``PACK_PATTERN`` and ``FIELDS``;
    each field becomes an attribute of the parsed header.

    Args:
        fh (file object): binary file handle positioned at the first byte of
          the record. On return it points just past the record.

    Raises:
        IOError: if the file ends before the whole record is read.
    """

    PACK_PATTERN = None
    """:mod:`struct` layout of the record, e.g. ``'<4sHHBxxxI'``.
    """

    FIELDS = None
    """Attribute names of the non-padding values in ``PACK_PATTERN``, in
    layout order.
    """

    def __init__(self, fh, *args, **kwargs):
        cls = self.__class__
        header_len = struct.calcsize(cls.PACK_PATTERN)
        raw = fh.read(header_len)
        if len(raw) != header_len:
            raise IOError('Short read bytes, expect %d, got %d' %
                          (header_len, len(raw)))

        fields = struct.unpack(cls.PACK_PATTERN, raw)
        for attr, value in zip(cls.FIELDS, fields):
            setattr(self, attr, value)

    @classmethod
    def to_binary(cls, **values):
        """Encode ``values``, keyed by ``FIELDS``, into the record bytes."""
        return struct.pack(cls.PACK_PATTERN, *[values[f] for f in cls.FIELDS])


class EnvSpec(object):
    """Static description of an environment.

    * id (str): registry id.
    * obs_dim (int): length of the observation vector.
    * action_dim (int): number of actuators; actions live in [-1, 1].
    * dt (float): control period in seconds.
    * max_episode_steps (int): time limit, steps beyond it are truncated.
    * pose_names (list of str): names of the pose features used for style.
    * angular_pose_indices (tuple of int): pose entries that are angles, their
      differences are wrapped before squaring.
    """

    def __init__(self, id, obs_dim, action_dim, dt, max_episode_steps,
                 pose_names, angular_pose_indices=()):
        if obs_dim < 1 or action_dim < 1 or len(pose_names) < 1:
            raise EnvException('Dimensions of %s must be positive' % (id))
        if not dt > 0:
            raise EnvException('dt must be positive, got %r' % (dt))
        self.id = id
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.dt = dt
        self.max_episode_steps = max_episode_steps
        self.pose_names = list(pose_names)
        self.angular_pose_indices = tuple(angular_pose_indices)

    @property
    def pose_dim(self):
        return len(self.pose_names)

    @property
    def action_low(self):
        return -np.ones(self.action_dim)

    @property
    def action_high(self):
        return np.ones(self.action_dim)


class EnvVariant(object):
    """Task variant of an environment.

    * speed_multiplier (int): target speed as a multiple of the expert speed,
      one of 1, 2, 3, 4. Anything but 1 switches on velocity tracking.
    * any_direction (bool): resample the target heading every episode.
    * tracking (bool): track ``speed_multiplier`` times the expert speed
      instead of maximizing forward speed.
    """

    SPEED_MULTIPLIERS = (1, 2, 3, 4)

    def __init__(self, speed_multiplier=1, any_direction=False,
                 tracking=False):
        if speed_multiplier not in self.SPEED_MULTIPLIERS:
            raise EnvException('Unknown speed multiplier: %r' %
                               (speed_multiplier))
        self.speed_multiplier = int(speed_multiplier)
        self.any_direction = bool(any_direction)
        self.tracking = bool(tracking) or self.speed_multiplier != 1

    def __eq__(self, other):
        return isinstance(other, EnvVariant) and \
            self.__dict__ == other.__dict__

    def __repr__(self):
        return 'EnvVariant(speed_multiplier=%d, any_direction=%s, ' \
            'tracking=%s)' % (self.speed_multiplier, self.any_direction,
                              self.tracking)


class Transition(object):
    """Outcome of one environment step.

    * observation (ndarray): observation after the step.
    * task_reward (float): environment reward.
    * pose (ndarray): world-position-free pose features after the step.
    * speed (float): forward speed after the step.
    * terminated (bool): the agent fell (or the state became non-finite).
    * truncated (bool): the time limit was reached.
    * error (bool): the state became non-finite.
    """

    def __init__(self, *args, **kwargs):
        for attr in ['observation', 'task_reward', 'pose', 'speed',
                     'terminated', 'truncated', 'error']:
            setattr(self, attr, kwargs.get(attr, None))
        self.error = bool(self.error)

    @property
    def done(self):
        return self.terminated or self.truncated


class LocomotionEnv(object, metaclass=abc.ABCMeta):
    """Base class of the desk-scale locomotion environments.

    Subclasses own the physical state and implement the abstract hooks; this
    class handles action clipping, step counting, time limits, the non-finite
    guard, and the speed term shared by maximization and tracking tasks.

    Args:
        variant (:class:`EnvVariant`): task variant, 1x speed maximization if
          omitted.
        seed (int): seed of the instance rng.
        reference_speed (float): expert forward speed. Required when the
          variant tracks a target speed.
    """

    def __init__(self, variant=None, seed=None, reference_speed=None):
        super(LocomotionEnv, self).__init__()
        self.variant = variant if variant is not None else EnvVariant()
        self.rng = np.random.default_rng(seed)
        self.reference_speed = reference_speed
        self.target_speed = None
        if self.variant.tracking:
            if reference_speed is None:
                raise EnvException('Tracking variant of %s needs a reference '
                                   'speed' % (self.spec.id))
            self.target_speed = self.variant.speed_multiplier * \
                float(reference_speed)
        self.steps = 0

    @property
    @abc.abstractmethod
    def spec(self):
        """The :class:`EnvSpec` of this instance."""
        pass

    @abc.abstractmethod
    def _reset_state(self):
        pass

    @abc.abstractmethod
    def _advance(self, action):
        """Integrate one control period under ``action`` (already clipped).

        Returns:
            float: forward speed after the step, used by the task reward.
        """
        pass

    @abc.abstractmethod
    def _observe(self):
        pass

    @abc.abstractmethod
    def _pose(self):
        pass

    @abc.abstractmethod
    def _task_reward(self, speed, action):
        pass

    def _fallen(self):
        return False

    def _state_vector(self):
        return self._observe()

    def speed_term(self, speed):
        """Forward speed for maximization, a Gaussian score for tracking."""
        if self.target_speed is None:
            return speed
        return float(np.exp(-(speed - self.target_speed) ** 2))

    def reset(self, seed=None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.steps = 0
        self._reset_state()
        return self._observe()

    def step(self, action):
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.spec.action_dim,):
            raise EnvException('Action shape mismatch: expect (%d,), got %s' %
                               (self.spec.action_dim, action.shape))
        action = np.clip(action, self.spec.action_low, self.spec.action_high)

        speed = self._advance(action)
        self.steps += 1

        obs = self._observe()
        pose = self._pose()
        if not (np.all(np.isfinite(self._state_vector())) and
                np.all(np.isfinite(obs)) and np.all(np.isfinite(pose)) and
                np.isfinite(speed)):
            return Transition(observation=obs, task_reward=0.0, pose=pose,
                              speed=0.0, terminated=True, truncated=False,
                              error=True)

        terminated = self._fallen()
        truncated = not terminated and \
            self.steps >= self.spec.max_episode_steps
        return Transition(observation=obs,
                          task_reward=float(self._task_reward(speed, action)),
                          pose=pose, speed=float(speed),
                          terminated=terminated, truncated=truncated)
