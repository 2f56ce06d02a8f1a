"""Expert demonstrations.

A demonstration is a single gait cycle of ``(action, pose)`` frames. It is
stored as UTF-8 JSON::

    {"meta": {"env_id": ..., "dt": ..., "n_frames": ..., "action_dim": ...,
              "pose_dim": ..., "pose_names": [...],
              "reference_speed": ...},          # optional
     "frames": [{"a": [...], "q": [...]}, ...]}

Floats are written with 17 significant digits so a file reloads to the
identical value. The pose ``q`` never holds world translation coordinates.
"""

import io
import json
import logging
import math

import numpy as np

from gaitprior.common import GaitPriorException
from gaitprior import utils

logger = logging.getLogger('gaitprior.demo')

FORMAT_VERSION = 1

MIN_FRAMES = 2
"""A gait cycle needs at least two frames.
"""


class DemoException(GaitPriorException):
    pass


class Demonstration(object):
    """One gait cycle of expert data.

    Args:
        env_id (str): environment the demonstration was recorded in.
        dt (float): time between frames in seconds.
        actions (ndarray): ``N x action_dim`` actions.
        poses (ndarray): ``N x pose_dim`` pose features.
        pose_names (list of str): names of the pose features.
        reference_speed (float): mean forward speed of the expert over the
          cycle, if known.

    Raises:
        DemoException: if the frames are inconsistent or non-finite. The
          message names the first offending frame.
    """

    def __init__(self, env_id, dt, actions, poses, pose_names,
                 reference_speed=None):
        self.env_id = str(env_id)
        self.dt = float(dt)
        self.pose_names = list(pose_names)
        self.reference_speed = None if reference_speed is None else \
            float(reference_speed)

        if not self.dt > 0 or not math.isfinite(self.dt):
            raise DemoException('dt must be positive, got %r' % (dt))

        actions = [np.asarray(a, dtype=np.float64) for a in actions]
        poses = [np.asarray(q, dtype=np.float64) for q in poses]
        if len(actions) != len(poses):
            raise DemoException('Expect as many poses as actions, got %d '
                                'and %d' % (len(poses), len(actions)))
        if len(actions) < MIN_FRAMES:
            raise DemoException('A demonstration needs at least %d frames, '
                                'got %d' % (MIN_FRAMES, len(actions)))

        action_dim = actions[0].size
        pose_dim = len(self.pose_names)
        if action_dim < 1 or pose_dim < 1:
            raise DemoException('Action and pose dimensions must be positive')
        for t, (a, q) in enumerate(zip(actions, poses)):
            if a.shape != (action_dim,):
                raise DemoException('Frame %d: expect %d actions, got %s' %
                                    (t, action_dim, a.shape))
            if q.shape != (pose_dim,):
                raise DemoException('Frame %d: expect %d pose features, got %s'
                                    % (t, pose_dim, q.shape))
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(q))):
                raise DemoException('Frame %d: non-finite value' % (t))

        self._actions = np.vstack(actions)
        self._poses = np.vstack(poses)
        self._actions.setflags(write=False)
        self._poses.setflags(write=False)

    @property
    def n_frames(self):
        return self._actions.shape[0]

    @property
    def action_dim(self):
        return self._actions.shape[1]

    @property
    def pose_dim(self):
        return self._poses.shape[1]

    @property
    def frames(self):
        """List of ``{'a': ndarray, 'q': ndarray}`` records."""
        return [{'a': a, 'q': q} for a, q in zip(self._actions, self._poses)]

    def pose(self, t):
        """Pose features of frame ``t`` (read-only)."""
        return self._poses[t]

    def poses_matrix(self):
        return self._poses.copy()

    def __eq__(self, other):
        if not isinstance(other, Demonstration):
            return False
        return self.env_id == other.env_id and self.dt == other.dt and \
            self.pose_names == other.pose_names and \
            self.reference_speed == other.reference_speed and \
            np.array_equal(self._actions, other._actions) and \
            np.array_equal(self._poses, other._poses)

    def __repr__(self):
        return 'Demonstration(env_id=%r, n_frames=%d, action_dim=%d, ' \
            'pose_dim=%d)' % (self.env_id, self.n_frames, self.action_dim,
                              self.pose_dim)


def actions_matrix(demo):
    """``N x action_dim`` matrix whose row ``t`` is the action of frame ``t``.
    """
    return demo._actions.copy()


def _float_list(values):
    return '[%s]' % (', '.join(utils.format_float(v) for v in values))


def dumps(demo):
    meta = {
        'format_version': FORMAT_VERSION,
        'env_id': demo.env_id,
        'dt': demo.dt,
        'n_frames': demo.n_frames,
        'action_dim': demo.action_dim,
        'pose_dim': demo.pose_dim,
        'pose_names': demo.pose_names,
    }
    if demo.reference_speed is not None:
        meta['reference_speed'] = demo.reference_speed

    meta_lines = []
    for key, val in meta.items():
        if isinstance(val, float):
            val = utils.format_float(val)
        else:
            val = json.dumps(val)
        meta_lines.append('    %s: %s' % (json.dumps(key), val))

    frame_lines = ['    {"a": %s, "q": %s}' % (_float_list(a), _float_list(q))
                   for a, q in zip(demo._actions, demo._poses)]
    return '{\n  "meta": {\n%s\n  },\n  "frames": [\n%s\n  ]\n}\n' % \
        (',\n'.join(meta_lines), ',\n'.join(frame_lines))


def loads(text):
    try:
        doc = json.loads(text)
    except ValueError as e:
        raise DemoException('Parse error: %s' % (e))

    try:
        meta = doc['meta']
        frames = doc['frames']
        n_frames = int(meta['n_frames'])
        action_dim = int(meta['action_dim'])
        pose_dim = int(meta['pose_dim'])
        pose_names = meta['pose_names']
        env_id, dt = meta['env_id'], float(meta['dt'])
    except (KeyError, TypeError, ValueError) as e:
        raise DemoException('Missing or invalid meta field: %s' % (e))

    if len(pose_names) != pose_dim:
        raise DemoException('Expect %d pose names, got %d' %
                            (pose_dim, len(pose_names)))
    if len(frames) != n_frames:
        raise DemoException('Expect %d frames, got %d' %
                            (n_frames, len(frames)))

    actions, poses = [], []
    for t, frame in enumerate(frames):
        try:
            a = np.asarray(frame['a'], dtype=np.float64)
            q = np.asarray(frame['q'], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise DemoException('Frame %d: cannot parse (%s)' % (t, e))
        if a.shape != (action_dim,):
            raise DemoException('Frame %d: expect %d actions, got %s' %
                                (t, action_dim, a.shape))
        if q.shape != (pose_dim,):
            raise DemoException('Frame %d: expect %d pose features, got %s' %
                                (t, pose_dim, q.shape))
        actions.append(a)
        poses.append(q)

    return Demonstration(env_id, dt, actions, poses, pose_names,
                         reference_speed=meta.get('reference_speed'))


def load_demonstration(path):
    """Load and validate a demonstration file.

    Args:
        path (str): path of the JSON demonstration.

    Returns:
        :class:`Demonstration`

    Raises:
        DemoException: on parse errors, dimension mismatches, non-finite
          values or fewer than two frames.
    """
    with io.open(path, 'r', encoding='utf-8') as f:
        demo = loads(f.read())
    logger.debug('Loaded %r from %s', demo, path)
    return demo


def save_demonstration(demo, path):
    """Write ``demo`` so that :func:`load_demonstration` reproduces it
    bit-exactly.
    """
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(dumps(demo))
