"""Open-loop oscillator experts and demonstration capture.

Every actuator follows ``a_i(t) = b_i + A_i sin(2 pi f t + psi_i)`` with a
shared frequency. Rolling such an expert out, discarding a few settling
cycles and recording one period yields the single-gait-cycle demonstration
the prior and the style reward are built from.

Oscillator configs are stored in the same JSON text conventions as
demonstrations::

    {"meta": {"env_id": ..., "format_version": 1},
     "oscillator": {"frequency": ..., "amplitudes": [...],
                    "phase_offsets": [...], "offsets": [...]}}
"""

import io
import json
import logging
import os

import numpy as np

from gaitprior.common import GaitPriorException
from gaitprior.demo import Demonstration, FORMAT_VERSION
from gaitprior import utils

logger = logging.getLogger('gaitprior.oscillator')

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')
"""Directory of the shipped expert configs, one ``<env_id>.json`` each.
"""

DEFAULT_SETTLE_CYCLES = 10


class OscillatorException(GaitPriorException):
    pass


class OscillatorConfig(object):
    """Per-actuator sinusoid parameters.

    Args:
        amplitudes (list of float): ``A_i``.
        frequency (float): shared frequency ``f`` in Hz.
        phase_offsets (list of float): ``psi_i`` in radians.
        offsets (list of float): ``b_i``; zeros if omitted.

    Raises:
        OscillatorException: if the lengths differ, ``f <= 0``, or
          ``|A_i| + |b_i| > 1`` for some actuator.
    """

    def __init__(self, amplitudes, frequency, phase_offsets, offsets=None):
        self.amplitudes = np.asarray(amplitudes, dtype=np.float64)
        self.frequency = float(frequency)
        self.phase_offsets = np.asarray(phase_offsets, dtype=np.float64)
        if offsets is None:
            offsets = np.zeros_like(self.amplitudes)
        self.offsets = np.asarray(offsets, dtype=np.float64)

        n = self.amplitudes.size
        if n < 1 or self.amplitudes.shape != (n,) or \
                self.phase_offsets.shape != (n,) or self.offsets.shape != (n,):
            raise OscillatorException('Amplitudes, phase offsets and offsets '
                                      'must have the same positive length')
        if not self.frequency > 0:
            raise OscillatorException('Frequency must be positive, got %r' %
                                      (frequency))
        bound = np.abs(self.amplitudes) + np.abs(self.offsets)
        if np.any(bound > 1.0 + 1e-12):
            i = int(np.argmax(bound))
            raise OscillatorException('Actuator %d leaves the action bounds: '
                                      '|A| + |b| = %g' % (i, bound[i]))

    @property
    def action_dim(self):
        return self.amplitudes.size

    @property
    def period(self):
        return 1.0 / self.frequency


def oscillator_action(config, t):
    """Action of the oscillator at time ``t`` (seconds)."""
    return config.offsets + config.amplitudes * \
        np.sin(2 * np.pi * config.frequency * t + config.phase_offsets)


def load_oscillator_config(path):
    with io.open(path, 'r', encoding='utf-8') as f:
        try:
            doc = json.load(f)
        except ValueError as e:
            raise OscillatorException('Parse error in %s: %s' % (path, e))
    try:
        osc = doc['oscillator']
        return OscillatorConfig(osc['amplitudes'], osc['frequency'],
                                osc['phase_offsets'], osc.get('offsets'))
    except (KeyError, TypeError) as e:
        raise OscillatorException('Missing oscillator field in %s: %s' %
                                  (path, e))


def save_oscillator_config(config, path, env_id=''):
    def floats(values):
        return '[%s]' % (', '.join(utils.format_float(v) for v in values))

    text = '{\n  "meta": {"env_id": %s, "format_version": %d},\n' \
        '  "oscillator": {\n' \
        '    "frequency": %s,\n' \
        '    "amplitudes": %s,\n' \
        '    "phase_offsets": %s,\n' \
        '    "offsets": %s\n' \
        '  }\n}\n' % (json.dumps(env_id), FORMAT_VERSION,
                      utils.format_float(config.frequency),
                      floats(config.amplitudes), floats(config.phase_offsets),
                      floats(config.offsets))
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(text)


def default_config_path(env_id):
    return os.path.join(DATA_DIR, '%s.json' % (env_id))


def default_oscillator_config(env_id):
    """The shipped expert of ``env_id``."""
    path = default_config_path(env_id)
    if not os.path.isfile(path):
        raise OscillatorException('No shipped expert for %s' % (env_id))
    return load_oscillator_config(path)


def generate_demonstration(env, config, settle_cycles=DEFAULT_SETTLE_CYCLES,
                           capture_cycles=1, seed=0):
    """Roll the oscillator out open loop and record one gait cycle.

    The first ``settle_cycles`` periods are discarded. Frame ``t`` of the
    result holds the action of step ``t`` and the pose that action produced.
    With ``capture_cycles > 1`` the poses are averaged over the captured
    periods; the actions repeat exactly.

    Args:
        env (:class:`gaitprior.common.LocomotionEnv`): environment instance.
        config (:class:`OscillatorConfig`): the expert.
        settle_cycles (int): periods to discard.
        capture_cycles (int): periods to record.
        seed (int): reset seed of ``env``.

    Returns:
        :class:`gaitprior.demo.Demonstration` with ``1 / (f dt)`` frames and
        the mean forward speed as ``reference_speed``.

    Raises:
        OscillatorException: if the period is not a multiple of ``dt``, the
          action dimensions differ, or the expert falls or becomes
          non-finite during the rollout.
    """
    spec = env.spec
    if config.action_dim != spec.action_dim:
        raise OscillatorException('%s has %d actuators, oscillator drives %d'
                                  % (spec.id, spec.action_dim,
                                     config.action_dim))
    n = utils.steps_per_period(config.frequency, spec.dt)
    if n is None:
        raise OscillatorException('Period %g s is not a multiple of dt=%g s'
                                  % (config.period, spec.dt))
    if settle_cycles < 0 or capture_cycles < 1:
        raise OscillatorException('Invalid cycle counts: settle %d, capture %d'
                                  % (settle_cycles, capture_cycles))

    env.reset(seed=seed)
    actions = np.zeros((n, spec.action_dim))
    poses = np.zeros((n, spec.pose_dim))
    speeds = []
    start = settle_cycles * n
    for k in range((settle_cycles + capture_cycles) * n):
        a = oscillator_action(config, k * spec.dt)
        tr = env.step(a)
        if tr.error:
            raise OscillatorException('Expert rollout of %s became non-finite '
                                      'at step %d' % (spec.id, k))
        if tr.terminated:
            raise OscillatorException('Expert of %s fell at step %d' %
                                      (spec.id, k))
        if k >= start:
            actions[(k - start) % n] = a
            poses[(k - start) % n] += tr.pose / capture_cycles
            speeds.append(tr.speed)

    demo = Demonstration(spec.id, spec.dt, actions, poses, spec.pose_names,
                         reference_speed=float(np.mean(speeds)))
    logger.info('Generated %r, reference speed %.4f m/s', demo,
                demo.reference_speed)
    return demo
