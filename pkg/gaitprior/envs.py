"""Environment registry.

Environments are looked up by id; :func:`make_env` validates the task variant
against what the environment supports and resolves the expert reference speed
for velocity-tracking variants.
"""

import functools
import logging

from gaitprior.common import EnvException, EnvVariant
from gaitprior.hopper import PlanarHopper
from gaitprior.point_gait import PointGait, PointGait2D
from gaitprior import oscillator

logger = logging.getLogger('gaitprior.envs')

ENV_HANDLER = {
    'point_gait': PointGait,
    'point_gait_2d': PointGait2D,
    'planar_hopper': PlanarHopper,
}
"""A map from environment id to environment class.
"""

FULL_ACTION_WEIGHTS = {1: 0.1, 2: 0.1, 3: 0.3, 4: 0.5}
ANY_DIRECTION_FULL_ACTION_WEIGHT = 0.2


def available_envs():
    return sorted(ENV_HANDLER.keys())


def _handler(env_id):
    if env_id not in ENV_HANDLER:
        raise EnvException('Unknown environment %r, available: %s' %
                           (env_id, ', '.join(available_envs())))
    return ENV_HANDLER[env_id]


def check_variant(env_id, variant):
    cls = _handler(env_id)
    if variant.any_direction and \
            not getattr(cls, 'SUPPORTS_ANY_DIRECTION', False):
        raise EnvException('%s does not support the any-direction variant' %
                           (env_id))


def make_env(env_id, variant=None, seed=None, reference_speed=None):
    """Create an independent environment instance.

    Args:
        env_id (str): registry id, see :func:`available_envs`.
        variant (:class:`gaitprior.common.EnvVariant`): task variant.
        seed (int): seed of the instance rng.
        reference_speed (float): expert speed for tracking variants. When
          omitted the shipped expert is rolled out to measure it.

    Returns:
        :class:`gaitprior.common.LocomotionEnv` instance.

    Raises:
        EnvException: for an unknown id or a variant the env does not support.
    """
    variant = variant if variant is not None else EnvVariant()
    check_variant(env_id, variant)
    if variant.tracking and reference_speed is None:
        reference_speed = expert_reference_speed(env_id)
    return _handler(env_id)(variant=variant, seed=seed,
                            reference_speed=reference_speed)


def default_demonstration(env_id, seed=0):
    """Demonstration generated from the shipped expert of ``env_id``."""
    env = _handler(env_id)(seed=seed)
    config = oscillator.default_oscillator_config(env_id)
    return oscillator.generate_demonstration(env, config, seed=seed)


@functools.lru_cache(maxsize=None)
def expert_reference_speed(env_id):
    """Mean forward speed of the shipped expert over one captured cycle."""
    speed = default_demonstration(env_id).reference_speed
    logger.debug('Reference speed of %s: %.4f', env_id, speed)
    return speed


def default_full_action_weight(variant):
    """Full-action weight used for a task variant when none is configured.

    >>> default_full_action_weight(EnvVariant(speed_multiplier=3))
    0.3
    """
    if variant.any_direction:
        return ANY_DIRECTION_FULL_ACTION_WEIGHT
    return FULL_ACTION_WEIGHTS[variant.speed_multiplier]
