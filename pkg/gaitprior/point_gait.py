"""Point-mass gait environments.

A point mass is pushed by two "limbs". Each limb has an internal phase
``p_i`` and produces thrust only while in stance (``sin p_i >= 0``). The
thrust and the phase rate of limb ``i`` depend only on the difference of its
actuator pair, so the 4-D action space holds an exact 2-D synergy.

``point_gait`` moves along a line; ``point_gait_2d`` adds a heading, a
steering actuator pair and a target direction that may be resampled every
episode.
"""

import numpy as np

from gaitprior.common import LocomotionEnv, EnvSpec

DT = 0.02
DRAG = 0.5
LIMB_RATE = 2 * np.pi
"""Nominal limb phase rate in rad/s.
"""
THRUST_GAIN = 0.5
STEER_RATE = 1.0
CONTROL_COST = 0.05
RESET_PHASE_NOISE = 0.05
MAX_EPISODE_STEPS = 500

POINT_GAIT_SPEC = EnvSpec(
    'point_gait', obs_dim=5, action_dim=4, dt=DT,
    max_episode_steps=MAX_EPISODE_STEPS,
    pose_names=['sin_p1', 'cos_p1', 'sin_p2', 'cos_p2', 'v'])

POINT_GAIT_2D_SPEC = EnvSpec(
    'point_gait_2d', obs_dim=8, action_dim=6, dt=DT,
    max_episode_steps=MAX_EPISODE_STEPS,
    pose_names=['sin_p1', 'cos_p1', 'sin_p2', 'cos_p2', 'v_forward'])


def limb_thrust(action, phases):
    """Thrust of both limbs, counted only for limbs in stance.

    Args:
        action (ndarray): the first four actuators, pairs ``(a1, a2)`` and
          ``(a3, a4)``.
        phases (ndarray): limb phases ``(p1, p2)``.

    >>> limb_thrust(np.array([1.0, 0.0, 0.0, 0.0]), np.array([0.5, 0.5]))
    0.5
    """
    drive = action[0:4:2] - action[1:4:2]
    stance = np.sin(phases) >= 0
    return float(THRUST_GAIN * np.sum(drive * stance))


def advance_phases(action, phases, dt=DT):
    drive = action[0:4:2] - action[1:4:2]
    return phases + (1.0 + drive) * LIMB_RATE * dt


def _limb_features(phases):
    return np.array([np.sin(phases[0]), np.cos(phases[0]),
                     np.sin(phases[1]), np.cos(phases[1])])


class PointGait(LocomotionEnv):
    """1-D point mass driven by two limbs.

    Observation ``(v, sin p1, cos p1, sin p2, cos p2)``; pose ``(sin p1,
    cos p1, sin p2, cos p2, v)``. The task reward is ``v - 0.05 |a|^2``, or
    ``exp(-(v - m v_ref)^2)`` when tracking.
    """

    @property
    def spec(self):
        return POINT_GAIT_SPEC

    def _reset_state(self):
        self.x = 0.0
        self.v = 0.0
        self.phases = np.array([0.0, np.pi]) + \
            self.rng.uniform(-RESET_PHASE_NOISE, RESET_PHASE_NOISE, size=2)

    def _advance(self, action):
        thrust = limb_thrust(action, self.phases)
        self.v = self.v + self.spec.dt * (thrust - DRAG * self.v)
        self.x = self.x + self.spec.dt * self.v
        self.phases = advance_phases(action, self.phases, self.spec.dt)
        return self.v

    def _state_vector(self):
        return np.concatenate([[self.x, self.v], self.phases])

    def _observe(self):
        return np.concatenate([[self.v], _limb_features(self.phases)])

    def _pose(self):
        return np.concatenate([_limb_features(self.phases), [self.v]])

    def _task_reward(self, speed, action):
        if self.target_speed is not None:
            return self.speed_term(speed)
        return speed - CONTROL_COST * float(np.dot(action, action))


class PointGait2D(LocomotionEnv):
    """Planar point mass with heading, two limbs and a steering pair.

    Thrust acts along the heading ``theta``; the steering pair ``(a5, a6)``
    turns at ``(a5 - a6)`` rad/s. The reward is the velocity projected onto the
    target direction ``beta`` minus the control cost. With ``any_direction``
    the target is drawn uniformly every episode, otherwise it is ``+x``.

    Observation: body-frame velocity (2), limb features (4), target direction
    in the body frame (2). Pose: limb features and forward body speed.
    """

    SUPPORTS_ANY_DIRECTION = True

    @property
    def spec(self):
        return POINT_GAIT_2D_SPEC

    def _reset_state(self):
        self.position = np.zeros(2)
        self.velocity = np.zeros(2)
        self.heading = 0.0
        self.phases = np.array([0.0, np.pi]) + \
            self.rng.uniform(-RESET_PHASE_NOISE, RESET_PHASE_NOISE, size=2)
        if self.variant.any_direction:
            self.target_direction = float(self.rng.uniform(-np.pi, np.pi))
        else:
            self.target_direction = 0.0

    def _body_velocity(self):
        c, s = np.cos(self.heading), np.sin(self.heading)
        vx, vy = self.velocity
        return np.array([c * vx + s * vy, -s * vx + c * vy])

    def _advance(self, action):
        dt = self.spec.dt
        thrust = limb_thrust(action, self.phases)
        forward = np.array([np.cos(self.heading), np.sin(self.heading)])
        self.velocity = self.velocity + dt * (thrust * forward -
                                              DRAG * self.velocity)
        self.position = self.position + dt * self.velocity
        self.heading = self.heading + dt * STEER_RATE * (action[4] - action[5])
        self.phases = advance_phases(action, self.phases, dt)
        target = np.array([np.cos(self.target_direction),
                           np.sin(self.target_direction)])
        return float(np.dot(self.velocity, target))

    def _state_vector(self):
        return np.concatenate([self.position, self.velocity, [self.heading],
                               self.phases])

    def _observe(self):
        rel = self.target_direction - self.heading
        return np.concatenate([self._body_velocity(),
                               _limb_features(self.phases),
                               [np.cos(rel), np.sin(rel)]])

    def _pose(self):
        return np.concatenate([_limb_features(self.phases),
                               [self._body_velocity()[0]]])

    def _task_reward(self, speed, action):
        if self.target_speed is not None:
            return self.speed_term(speed)
        return speed - CONTROL_COST * float(np.dot(action, action))

