"""Planar two-legged hopper.

A rigid body (mass 10 kg, pitch inertia 1 kg m^2) moves in the x-z plane on
two massless legs attached at +-0.2 m along the body axis. Each leg has a hip
angle and a length, both driven by first-order actuators::

    d(alpha)/dt = (tau - K_HIP * alpha) / C_HIP
    d(l)/dt     = (F - K_LEG * (l - LEG_REST)) / C_LEG

A foot below the ground is pushed back by a spring-damper normal force and a
viscous tangential force bounded by Coulomb friction.

The body is integrated with semi-implicit Euler: velocities first, then
positions with the new velocities. In ballistic flight the height lags the
exact parabola by ``g dt t / 2``, so the energy drifts by ``m g^2 dt / 2``
per simulated second.
"""

import numpy as np

from gaitprior.common import LocomotionEnv, EnvSpec

DT = 0.01
MASS = 10.0
INERTIA = 1.0
GRAVITY = 9.81
HIP_OFFSETS = np.array([0.2, -0.2])

TORQUE_MAX = 20.0
THRUST_MAX = 200.0

K_HIP = 40.0
C_HIP = 4.0
K_LEG = 1000.0
C_LEG = 50.0
LEG_REST = 0.5

GROUND_STIFFNESS = 4000.0
GROUND_DAMPING = 100.0
FRICTION_DAMPING = 200.0
FRICTION_COEF = 1.0

MIN_HEIGHT = 0.3
MAX_PITCH = 1.0
ALIVE_BONUS = 0.5
CONTROL_COST = 0.05
RESET_NOISE = 0.01
MAX_EPISODE_STEPS = 1000

HOPPER_SPEC = EnvSpec(
    'planar_hopper', obs_dim=11, action_dim=4, dt=DT,
    max_episode_steps=MAX_EPISODE_STEPS,
    pose_names=['z', 'pitch', 'hip_angle_1', 'hip_angle_2', 'leg_length_1',
                'leg_length_2'],
    angular_pose_indices=(1,))


def _cross(r, f):
    return r[0] * f[1] - r[1] * f[0]


class PlanarHopper(LocomotionEnv):
    """Planar hopper.

    Actions are ``(hip torque, leg thrust)`` for leg 1 then leg 2, scaled by
    ``TORQUE_MAX`` and ``THRUST_MAX``. Observation ``(z, pitch, vx, vz,
    pitch rate, hip angles, leg lengths, foot contacts)``; pose ``(z, pitch,
    hip angles, leg lengths)``. The episode terminates when the body drops
    below 0.3 m or pitches beyond 1 rad.
    """

    @property
    def spec(self):
        return HOPPER_SPEC

    def _reset_state(self):
        noise = self.rng.uniform(-RESET_NOISE, RESET_NOISE, size=2)
        self.x = 0.0
        self.z = LEG_REST + 0.02 + noise[0]
        self.pitch = noise[1]
        self.vx = 0.0
        self.vz = 0.0
        self.pitch_rate = 0.0
        self.hip_angle = np.zeros(2)
        self.leg_length = np.full(2, LEG_REST)
        self.contact = np.zeros(2)

    def _leg_geometry(self, i):
        axis = np.array([np.cos(self.pitch), np.sin(self.pitch)])
        hip = np.array([self.x, self.z]) + HIP_OFFSETS[i] * axis
        angle = self.pitch + self.hip_angle[i]
        direction = np.array([np.sin(angle), -np.cos(angle)])
        return hip, direction

    def foot_positions(self):
        feet = []
        for i in range(2):
            hip, direction = self._leg_geometry(i)
            feet.append(hip + self.leg_length[i] * direction)
        return np.array(feet)

    def _advance(self, action):
        tau = TORQUE_MAX * action[0::2]
        thrust = THRUST_MAX * action[1::2]
        hip_rate = (tau - K_HIP * self.hip_angle) / C_HIP
        leg_rate = (thrust - K_LEG * (self.leg_length - LEG_REST)) / C_LEG

        com = np.array([self.x, self.z])
        com_vel = np.array([self.vx, self.vz])
        force = np.array([0.0, -MASS * GRAVITY])
        torque = 0.0
        contact = np.zeros(2)
        for i in range(2):
            hip, direction = self._leg_geometry(i)
            foot = hip + self.leg_length[i] * direction
            if foot[1] >= 0.0:
                continue
            r_hip = hip - com
            hip_vel = com_vel + self.pitch_rate * np.array([-r_hip[1],
                                                            r_hip[0]])
            swing = np.array([-direction[1], direction[0]])
            foot_vel = hip_vel + leg_rate[i] * direction + \
                self.leg_length[i] * (self.pitch_rate + hip_rate[i]) * swing
            normal = max(0.0, -GROUND_STIFFNESS * foot[1] -
                         GROUND_DAMPING * foot_vel[1])
            limit = FRICTION_COEF * normal
            tangential = float(np.clip(-FRICTION_DAMPING * foot_vel[0],
                                       -limit, limit))
            f = np.array([tangential, normal])
            force += f
            torque += _cross(foot - com, f)
            contact[i] = 1.0

        dt = self.spec.dt
        vx = self.vx + dt * force[0] / MASS
        vz = self.vz + dt * force[1] / MASS
        pitch_rate = self.pitch_rate + dt * torque / INERTIA
        self.x += dt * vx
        self.z += dt * vz
        self.pitch += dt * pitch_rate
        self.vx, self.vz, self.pitch_rate = vx, vz, pitch_rate
        self.hip_angle = self.hip_angle + dt * hip_rate
        self.leg_length = self.leg_length + dt * leg_rate
        self.contact = contact
        return self.vx

    def mechanical_energy(self):
        """Kinetic plus potential energy of the body."""
        return 0.5 * MASS * (self.vx ** 2 + self.vz ** 2) + \
            0.5 * INERTIA * self.pitch_rate ** 2 + MASS * GRAVITY * self.z

    def _state_vector(self):
        return np.concatenate([[self.x, self.z, self.pitch, self.vx, self.vz,
                                self.pitch_rate], self.hip_angle,
                               self.leg_length])

    def _observe(self):
        return np.concatenate([[self.z, self.pitch, self.vx, self.vz,
                                self.pitch_rate], self.hip_angle,
                               self.leg_length, self.contact])

    def _pose(self):
        return np.concatenate([[self.z, self.pitch], self.hip_angle,
                               self.leg_length])

    def _fallen(self):
        return self.z < MIN_HEIGHT or abs(self.pitch) > MAX_PITCH

    def _task_reward(self, speed, action):
        return self.speed_term(speed) + ALIVE_BONUS - \
            CONTROL_COST * float(np.dot(action, action))
