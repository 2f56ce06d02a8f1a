"""Experiment configuration.

An experiment is described by one flat ``[experiment]`` section of an INI
file. Learner keys (see :class:`gaitprior.ppo.PpoConfig`) and experiment keys
share that section. Values are resolved as defaults < config file < command
line overrides, and the effective configuration is echoed next to the results.
"""

import collections
import configparser
import datetime
import io
import logging
import os

from dateutil import tz

import gaitprior
from gaitprior.common import GaitPriorException, EnvVariant, EnvException
from gaitprior.envs import check_variant, default_full_action_weight
from gaitprior.imitation import RewardWeights, ImitationException
from gaitprior.policy import PpoException
from gaitprior.ppo import PpoConfig

logger = logging.getLogger('gaitprior.config')

SECTION = 'experiment'
OUT_ENV = 'GAITPRIOR_OUT'
DEFAULT_OUT = 'runs'
AUTO = 'auto'

MODES = ('ppo', 'ppo_style', 'ppo_latent', 'ppo_latent_style')
STYLE_MODES = ('ppo_style', 'ppo_latent_style')
LATENT_MODES = ('ppo_latent', 'ppo_latent_style')


class ConfigException(GaitPriorException):
    pass


class ExperimentConfig(object):
    """Effective configuration of one experiment.

    Experiment keys are listed in ``DEFAULTS``; any key of
    ``PpoConfig.DEFAULTS`` is accepted as well. ``w_full`` and ``latent_dim``
    default to ``None``: the variant's default weight and
    ``ceil(a_full / 2)``. Empty ``demo`` / ``prior`` paths mean "generate from
    the shipped expert" and "train from the demonstration".

    Raises:
        ConfigException: for unknown keys or values out of range.
    """

    DEFAULTS = collections.OrderedDict([
        ('env', 'point_gait'),
        ('speed_multiplier', 1),
        ('any_direction', False),
        ('tracking', False),
        ('mode', 'ppo_latent_style'),
        ('demo', ''),
        ('prior', ''),
        ('latent_dim', None),
        ('w_full', None),
        ('prior_epochs', 10000),
        ('prior_lr', 1e-3),
        ('prior_seed', 0),
        ('w_task', 0.67),
        ('w_style', 0.33),
        ('seeds', (0, 1, 2, 3, 4)),
        ('eval_episodes', 10),
        ('out', ''),
    ])

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.DEFAULTS) - set(PpoConfig.DEFAULTS)
        if len(unknown) > 0:
            raise ConfigException('Unknown option(s): %s' %
                                  (', '.join(sorted(unknown))))
        for key, default in self.DEFAULTS.items():
            setattr(self, key, kwargs.get(key, default))
        self.seeds = tuple(int(s) for s in self.seeds)
        self.ppo_options = collections.OrderedDict(
            (k, kwargs[k]) for k in PpoConfig.DEFAULTS if k in kwargs)
        self._validate()

    def _validate(self):
        if self.mode not in MODES:
            raise ConfigException('Unknown mode %r, expect one of %s' %
                                  (self.mode, ', '.join(MODES)))
        try:
            check_variant(self.env, self.variant())
        except EnvException as e:
            raise ConfigException(str(e))
        if self.w_full is not None and not 0.0 <= self.w_full <= 1.0:
            raise ConfigException('w_full must be in [0, 1], got %r' %
                                  (self.w_full))
        if self.latent_dim is not None and self.latent_dim < 1:
            raise ConfigException('latent_dim must be positive, got %r' %
                                  (self.latent_dim))
        if len(self.seeds) < 1:
            raise ConfigException('At least one seed is required')
        if self.eval_episodes < 1:
            raise ConfigException('eval_episodes must be positive, got %r' %
                                  (self.eval_episodes))
        if self.prior_epochs < 0 or self.prior_lr < 0:
            raise ConfigException('Prior training settings must be '
                                  'non-negative')
        try:
            RewardWeights(self.w_task, self.w_style)
            self.ppo_config()
        except (ImitationException, PpoException) as e:
            raise ConfigException(str(e))

    @property
    def uses_demo(self):
        return self.mode != 'ppo'

    @property
    def uses_prior(self):
        return self.mode in LATENT_MODES

    @property
    def uses_style(self):
        return self.mode in STYLE_MODES

    def variant(self):
        try:
            return EnvVariant(self.speed_multiplier, self.any_direction,
                              self.tracking)
        except EnvException as e:
            raise ConfigException(str(e))

    def reward_weights(self):
        """Raw task reward for ``ppo``; the style weight is zero in the other
        modes without the style reward.
        """
        if self.mode == 'ppo':
            return RewardWeights.task_only()
        return RewardWeights(self.w_task,
                             self.w_style if self.uses_style else 0.0)

    def full_action_weight(self):
        if self.w_full is not None:
            return self.w_full
        return default_full_action_weight(self.variant())

    def ppo_config(self, seed=None):
        options = dict(self.ppo_options)
        if seed is not None:
            options['seed'] = seed
        return PpoConfig(**options)

    def replace(self, **kwargs):
        """A copy with some values changed."""
        values = self.as_dict(effective=False)
        values.update(kwargs)
        return ExperimentConfig(**values)

    def as_dict(self, effective=True):
        """Ordered values; learner keys are included with their defaults
        when ``effective`` is set, otherwise only the ones given.
        """
        values = collections.OrderedDict(
            (key, getattr(self, key)) for key in self.DEFAULTS)
        if effective:
            ppo = self.ppo_config().as_dict()
            ppo.update(self.ppo_options)
            values.update(ppo)
        else:
            values.update(self.ppo_options)
        return values


def _all_defaults():
    defaults = collections.OrderedDict(ExperimentConfig.DEFAULTS)
    defaults.update(PpoConfig.DEFAULTS)
    return defaults


def parse_value(key, text):
    """Convert the text of a config value to the type of its default.

    >>> parse_value('seeds', '0, 1, 2')
    (0, 1, 2)

    >>> parse_value('w_full', 'auto') is None
    True
    """
    defaults = _all_defaults()
    if key not in defaults:
        raise ConfigException('Unknown option: %s' % (key))
    default = defaults[key]
    text = text.strip()
    try:
        if default is None:
            if text.lower() in (AUTO, ''):
                return None
            return int(text) if key == 'latent_dim' else float(text)
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered not in configparser.RawConfigParser.BOOLEAN_STATES:
                raise ValueError('not a boolean: %r' % (text))
            return configparser.RawConfigParser.BOOLEAN_STATES[lowered]
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(v) for v in text.split(',') if v.strip())
    except ValueError as e:
        raise ConfigException('Invalid value for %s: %s' % (key, e))
    return text


def format_value(value):
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (tuple, list)):
        return ','.join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_config_file(path):
    """Typed values of the ``[experiment]`` section of an INI file."""
    parser = configparser.ConfigParser()
    try:
        with io.open(path, 'r', encoding='utf-8') as f:
            parser.read_file(f)
    except configparser.Error as e:
        raise ConfigException('Malformed config file %s: %s' % (path, e))
    if not parser.has_section(SECTION):
        raise ConfigException('Config file %s has no [%s] section' %
                              (path, SECTION))
    return collections.OrderedDict(
        (key, parse_value(key, text))
        for key, text in parser.items(SECTION))


def parse_overrides(pairs):
    """Typed values of ``key=value`` command line overrides."""
    values = collections.OrderedDict()
    for pair in pairs or []:
        if '=' not in pair:
            raise ConfigException('Override must be key=value, got %r' %
                                  (pair))
        key, text = pair.split('=', 1)
        values[key.strip()] = parse_value(key.strip(), text)
    return values


def load_config(path=None, overrides=None):
    """Build an :class:`ExperimentConfig`.

    Args:
        path (str): INI file, optional.
        overrides (dict): typed values that win over the file.
    """
    values = collections.OrderedDict()
    if path is not None:
        values.update(read_config_file(path))
    values.update(overrides or {})
    return ExperimentConfig(**values)


def resolve_out(cli_out=None, file_out=''):
    """Output root: command line, then ``$GAITPRIOR_OUT``, then the file."""
    if cli_out:
        return cli_out
    if os.environ.get(OUT_ENV):
        return os.environ[OUT_ENV]
    if file_out:
        return file_out
    return DEFAULT_OUT


def write_config(config, path):
    """Echo the effective configuration as an INI file."""
    parser = configparser.ConfigParser()
    parser[SECTION] = collections.OrderedDict(
        (k, format_value(v)) for k, v in config.as_dict().items())
    with io.open(path, 'w', encoding='utf-8') as f:
        parser.write(f)


def write_manifest(path, command, **extra):
    """Package version, command and UTC creation time of an output dir."""
    parser = configparser.ConfigParser()
    created = datetime.datetime.now(tz.tzutc())
    parser['manifest'] = collections.OrderedDict(
        [('version', gaitprior.__version__), ('command', command),
         ('created', created.isoformat())] +
        [(k, format_value(v)) for k, v in extra.items()])
    with io.open(path, 'w', encoding='utf-8') as f:
        parser.write(f)
