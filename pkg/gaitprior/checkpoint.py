"""Binary checkpoints of priors and policies.

File layout::

    +----------------------------------------------+
    | header: magic, version, kind, meta length    |  CheckpointHeader
    +----------------------------------------------+
    | meta: UTF-8 JSON                             |
    +----------------------------------------------+
    | arrays: little-endian float64, in the order  |
    | and shapes listed in meta["arrays"]          |
    +----------------------------------------------+

Arrays are stored raw, so a loaded checkpoint is bit-identical to the saved
one.
"""

import collections
import io
import json
import logging

import numpy as np

from gaitprior.common import GaitPriorException, GenericHeader
from gaitprior.demo import Demonstration, actions_matrix
from gaitprior.nn import Mlp
from gaitprior.policy import Policy, PolicyParams, RunningNorm
from gaitprior.prior import LatentActionPrior

logger = logging.getLogger('gaitprior.checkpoint')

CHECKPOINT_MAGIC = b'GPCK'
VERSION_MAJOR = 1
VERSION_MINOR = 0

KIND_PRIOR = 'prior'
KIND_POLICY = 'policy'
KINDS = (KIND_PRIOR, KIND_POLICY)

ARRAY_DTYPE = np.dtype('<f8')


class CheckpointException(GaitPriorException):
    pass


class CheckpointHeader(GenericHeader):
    """Fixed-size checkpoint header.

    * magic (bytes): ``b'GPCK'``.
    * version_major, version_minor (int): format version; files with another
      major version are rejected.
    * kind (int): index into ``KINDS``.
    * meta_len (int): length of the JSON meta block in bytes.
    """

    PACK_PATTERN = '<4sHHBxxxI'
    FIELDS = ['magic', 'version_major', 'version_minor', 'kind', 'meta_len']

    def __init__(self, fh, *args, **kwargs):
        try:
            super(CheckpointHeader, self).__init__(fh, *args, **kwargs)
        except IOError as e:
            raise CheckpointException('Truncated checkpoint header: %s' % (e))
        if self.magic != CHECKPOINT_MAGIC:
            raise CheckpointException('Bad checkpoint magic: %r' %
                                      (self.magic))
        if self.version_major != VERSION_MAJOR:
            raise CheckpointException('Unsupported checkpoint version %d.%d, '
                                      'expect %d.x' %
                                      (self.version_major, self.version_minor,
                                       VERSION_MAJOR))
        if self.kind >= len(KINDS):
            raise CheckpointException('Unknown checkpoint kind %d' %
                                      (self.kind))


class Checkpoint(object):
    """In-memory checkpoint.

    Args:
        kind (str): ``'prior'`` or ``'policy'``.
        meta (dict): JSON-serializable metadata.
        arrays (OrderedDict): name to float64 array.
    """

    def __init__(self, kind, meta, arrays):
        if kind not in KINDS:
            raise CheckpointException('Unknown checkpoint kind %r' % (kind))
        self.kind = kind
        self.meta = meta
        self.arrays = collections.OrderedDict(
            (name, np.asarray(a, dtype=np.float64))
            for name, a in arrays.items())

    def __eq__(self, other):
        if not isinstance(other, Checkpoint):
            return False
        return self.kind == other.kind and self.meta == other.meta and \
            list(self.arrays) == list(other.arrays) and \
            all(np.array_equal(a, other.arrays[n], equal_nan=True)
                for n, a in self.arrays.items())


def save_checkpoint(ckpt, path):
    meta = dict(ckpt.meta)
    meta['arrays'] = [[name, list(a.shape)] for name, a in ckpt.arrays.items()]
    raw_meta = json.dumps(meta, sort_keys=True).encode('utf-8')
    with io.open(path, 'wb') as f:
        f.write(CheckpointHeader.to_binary(
            magic=CHECKPOINT_MAGIC, version_major=VERSION_MAJOR,
            version_minor=VERSION_MINOR, kind=KINDS.index(ckpt.kind),
            meta_len=len(raw_meta)))
        f.write(raw_meta)
        for a in ckpt.arrays.values():
            f.write(np.ascontiguousarray(a, dtype=ARRAY_DTYPE).tobytes())
    logger.debug('Saved %s checkpoint with %d arrays to %s', ckpt.kind,
                 len(ckpt.arrays), path)


def load_checkpoint(path):
    """Read a checkpoint file.

    Raises:
        CheckpointException: on a bad magic, an unsupported version or a
          truncated file.
    """
    with io.open(path, 'rb') as f:
        header = CheckpointHeader(f)
        raw_meta = f.read(header.meta_len)
        if len(raw_meta) != header.meta_len:
            raise CheckpointException('Truncated checkpoint meta in %s' %
                                      (path))
        try:
            meta = json.loads(raw_meta.decode('utf-8'))
        except ValueError as e:
            raise CheckpointException('Corrupted checkpoint meta in %s: %s' %
                                      (path, e))
        arrays = collections.OrderedDict()
        for name, shape in meta.pop('arrays', []):
            count = int(np.prod(shape))
            raw = f.read(count * ARRAY_DTYPE.itemsize)
            if len(raw) != count * ARRAY_DTYPE.itemsize:
                raise CheckpointException('Truncated array %s in %s' %
                                          (name, path))
            arrays[name] = np.frombuffer(raw, dtype=ARRAY_DTYPE).astype(
                np.float64).reshape(shape)
    return Checkpoint(KINDS[header.kind], meta, arrays)


def _mlp_meta(net):
    return {'layer_sizes': list(net.layer_sizes),
            'hidden_activation': net.hidden_activation,
            'output_activation': net.output_activation}


def _put_mlp(arrays, prefix, net):
    for name, p in zip(net.parameter_names(), net.parameters()):
        arrays['%s/%s' % (prefix, name)] = p


def _get_mlp(ckpt, prefix, meta):
    sizes = meta['layer_sizes']
    params = []
    for l in range(len(sizes) - 1):
        params.append(ckpt.arrays['%s/layer %d weights' % (prefix, l)])
        params.append(ckpt.arrays['%s/layer %d biases' % (prefix, l)])
    return Mlp(sizes, params[0::2], params[1::2], meta['hidden_activation'],
               meta['output_activation'])


def _prior_parts(prior, arrays, prefix='prior'):
    _put_mlp(arrays, prefix + '/encoder', prior.encoder)
    _put_mlp(arrays, prefix + '/decoder', prior.decoder)
    return {'encoder': _mlp_meta(prior.encoder),
            'decoder': _mlp_meta(prior.decoder),
            'latent_dim': prior.latent_dim,
            'full_action_weight': prior.full_action_weight,
            'source_demo_id': prior.source_demo_id,
            'loss_history': list(prior.loss_history),
            'final_loss': prior.final_loss}


def _prior_from_parts(ckpt, meta, prefix='prior'):
    try:
        return LatentActionPrior(
            _get_mlp(ckpt, prefix + '/encoder', meta['encoder']),
            _get_mlp(ckpt, prefix + '/decoder', meta['decoder']),
            meta['full_action_weight'], meta['source_demo_id'],
            meta['loss_history'])
    except KeyError as e:
        raise CheckpointException('Missing prior field %s' % (e))


def prior_to_checkpoint(prior):
    arrays = collections.OrderedDict()
    meta = {'prior': _prior_parts(prior, arrays)}
    return Checkpoint(KIND_PRIOR, meta, arrays)


def prior_from_checkpoint(ckpt):
    if ckpt.kind != KIND_PRIOR:
        raise CheckpointException('Expect a prior checkpoint, got %s' %
                                  (ckpt.kind))
    return _prior_from_parts(ckpt, ckpt.meta['prior'])


def policy_to_checkpoint(policy, env_id, variant, config=None,
                         reference_speed=None):
    """Self-contained policy checkpoint.

    Besides the networks and the normalization statistics it embeds the
    frozen prior and the demonstration (phase length and expert poses), the
    task variant and the effective configuration.
    """
    arrays = collections.OrderedDict()
    _put_mlp(arrays, 'pi', policy.params.pi_net)
    _put_mlp(arrays, 'v', policy.params.v_net)
    arrays['log_std'] = policy.params.log_std
    arrays['norm/mean'] = policy.norm.mean
    arrays['norm/var'] = policy.norm.var
    meta = {
        'env_id': env_id,
        'variant': {'speed_multiplier': variant.speed_multiplier,
                    'any_direction': variant.any_direction,
                    'tracking': variant.tracking},
        'reference_speed': reference_speed,
        'pi': _mlp_meta(policy.params.pi_net),
        'v': _mlp_meta(policy.params.v_net),
        'norm': {'count': policy.norm.count, 'clip': policy.norm.clip},
        'config': json.loads(json.dumps(config or {})),
    }
    if policy.prior is not None:
        meta['prior'] = _prior_parts(policy.prior, arrays)
    if policy.demo is not None:
        demo = policy.demo
        arrays['demo/actions'] = actions_matrix(demo)
        arrays['demo/poses'] = demo.poses_matrix()
        meta['demo'] = {'env_id': demo.env_id, 'dt': demo.dt,
                        'pose_names': demo.pose_names,
                        'reference_speed': demo.reference_speed}
    return Checkpoint(KIND_POLICY, meta, arrays)


def policy_from_checkpoint(ckpt):
    """Rebuild the :class:`gaitprior.policy.Policy` of a policy checkpoint."""
    if ckpt.kind != KIND_POLICY:
        raise CheckpointException('Expect a policy checkpoint, got %s' %
                                  (ckpt.kind))
    meta = ckpt.meta
    try:
        params = PolicyParams(_get_mlp(ckpt, 'pi', meta['pi']),
                              _get_mlp(ckpt, 'v', meta['v']),
                              ckpt.arrays['log_std'])
        mean = ckpt.arrays['norm/mean']
        norm = RunningNorm(mean.size, meta['norm']['count'], mean,
                           ckpt.arrays['norm/var'], meta['norm']['clip'])
    except KeyError as e:
        raise CheckpointException('Missing policy field %s' % (e))

    prior = None
    if 'prior' in meta:
        prior = _prior_from_parts(ckpt, meta['prior'])
    demo = None
    if 'demo' in meta:
        d = meta['demo']
        demo = Demonstration(d['env_id'], d['dt'], ckpt.arrays['demo/actions'],
                             ckpt.arrays['demo/poses'], d['pose_names'],
                             d['reference_speed'])
    return Policy(params, norm, prior, demo)
