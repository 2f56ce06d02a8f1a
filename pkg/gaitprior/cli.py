#!/usr/bin/env python
"""Command line interface.

Sub-commands::

    gaitprior gen-demo     roll out an oscillator expert, save one gait cycle
    gaitprior analyze      PCA of the demonstration actions
    gaitprior train-prior  fit the latent action prior
    gaitprior train        train policies for every configured seed
    gaitprior eval         evaluate a policy checkpoint
    gaitprior sweep        repeat ``train`` over values of w_full/latent_dim

Exit status is 0 on success, 2 for invalid input (configuration,
demonstration, oscillator, checkpoint or environment errors) and 3 for
failures while running.
"""

import argparse
import collections
import functools
import logging
import multiprocessing
import os
import sys

import numpy as np

from gaitprior.checkpoint import (CheckpointException, load_checkpoint,
                                  save_checkpoint, prior_to_checkpoint,
                                  prior_from_checkpoint, policy_to_checkpoint,
                                  policy_from_checkpoint)
from gaitprior.common import GaitPriorException, EnvException, EnvVariant
from gaitprior.config import (ConfigException, load_config, parse_overrides,
                              resolve_out, write_config, write_manifest)
from gaitprior.demo import DemoException, actions_matrix, \
    load_demonstration, save_demonstration
from gaitprior.envs import make_env, default_demonstration, available_envs
from gaitprior.oscillator import (OscillatorException, generate_demonstration,
                                  load_oscillator_config,
                                  default_oscillator_config,
                                  DEFAULT_SETTLE_CYCLES)
from gaitprior.ppo import train, evaluate
from gaitprior.prior import train_autoencoder, DEFAULT_EPOCHS, DEFAULT_LR, \
    DEFAULT_FULL_ACTION_WEIGHT
from gaitprior.synergy import compute_pca, suggest_latent_dim, \
    dims_for_variance
from gaitprior import report

logger = logging.getLogger('gaitprior.cli')

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3

INPUT_ERRORS = (ConfigException, DemoException, OscillatorException,
                CheckpointException, EnvException)

SWEEP_PARAMS = ('w_full', 'latent_dim')


def arg_parser():
    parser = argparse.ArgumentParser(
        prog='gaitprior',
        description="Latent action priors from a single gait cycle.")
    parser.add_argument('--verbose', action='store_true',
                        help="Verbose output.")
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('gen-demo', help="Generate a demonstration.")
    p.add_argument('--env', default='point_gait', choices=available_envs())
    p.add_argument('--oscillator', help="Oscillator config, shipped expert "
                   "if omitted.")
    p.add_argument('--out', required=True, help="Output demonstration.")
    p.add_argument('--settle-cycles', type=int, default=DEFAULT_SETTLE_CYCLES)
    p.add_argument('--capture-cycles', type=int, default=1)
    p.add_argument('--seed', type=int, default=0)
    p.set_defaults(func=cmd_gen_demo)

    p = sub.add_parser('analyze', help="PCA of demonstration actions.")
    p.add_argument('demo', help="Demonstration file.")
    p.add_argument('--out', required=True, help="Output CSV.")
    p.add_argument('--svg', help="Optional cumulative variance chart.")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('train-prior', help="Train the latent action prior.")
    p.add_argument('demo', help="Demonstration file.")
    p.add_argument('--latent-dim', type=int,
                   help="Latent dimension, half the action space if omitted.")
    p.add_argument('--epochs', type=int, default=DEFAULT_EPOCHS)
    p.add_argument('--lr', type=float, default=DEFAULT_LR)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--w-full', type=float, default=DEFAULT_FULL_ACTION_WEIGHT)
    p.add_argument('--out', required=True, help="Output checkpoint.")
    p.set_defaults(func=cmd_train_prior)

    for name, func, text in [('train', cmd_train, "Train policies."),
                             ('sweep', cmd_sweep, "Sensitivity sweep.")]:
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', help="INI config file.")
        p.add_argument('--set', action='append', default=[],
                       metavar='KEY=VALUE', help="Override a config value.")
        p.add_argument('--out', help="Output directory.")
        p.add_argument('--workers', type=int, default=1,
                       help="Parallel worker processes.")
        if name == 'sweep':
            p.add_argument('--param', required=True, choices=SWEEP_PARAMS)
            p.add_argument('--values', required=True, nargs='+')
        p.set_defaults(func=func)

    p = sub.add_parser('eval', help="Evaluate a policy checkpoint.")
    p.add_argument('policy', help="Policy checkpoint.")
    p.add_argument('--env', help="Environment, the training one if omitted.")
    p.add_argument('--episodes', type=int, default=10)
    p.add_argument('--stochastic', action='store_true',
                   help="Sample actions instead of using the mean.")
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', required=True, help="Output metrics CSV.")
    p.set_defaults(func=cmd_eval)
    return parser


def _makedirs(path):
    if not os.path.isdir(path):
        os.makedirs(path)


def cmd_gen_demo(args):
    if args.oscillator:
        config = load_oscillator_config(args.oscillator)
    else:
        config = default_oscillator_config(args.env)
    env = make_env(args.env, seed=args.seed)
    demo = generate_demonstration(env, config, args.settle_cycles,
                                  args.capture_cycles, args.seed)
    save_demonstration(demo, args.out)
    logger.info('Demonstration with %d frames written to %s', demo.n_frames,
                args.out)


def cmd_analyze(args):
    demo = load_demonstration(args.demo)
    pca = compute_pca(actions_matrix(demo))
    report.write_csv(args.out, report.PCA_FIELDS, report.pca_rows(pca))
    if args.svg:
        n = len(pca.cumulative)
        report.write_svg(args.svg, report.line_chart(
            [('cumulative', list(range(1, n + 1)), list(pca.cumulative))],
            title='Explained variance of %s' % (demo.env_id),
            x_label='components', y_label='cumulative ratio'))
    suggested = suggest_latent_dim(demo.action_dim)
    print('suggested_latent_dim=%d' % (suggested))
    print('dims_for_97_percent=%d' % (dims_for_variance(pca)))
    logger.info('%d components explain %.4f of the variance', suggested,
                pca.cumulative[suggested - 1])


def cmd_train_prior(args):
    demo = load_demonstration(args.demo)
    latent_dim = args.latent_dim or suggest_latent_dim(demo.action_dim)
    if not 1 <= latent_dim <= demo.action_dim:
        raise ConfigException('latent dim must be in [1, %d], got %d' %
                              (demo.action_dim, latent_dim))
    prior = train_autoencoder(demo, latent_dim, args.epochs, args.lr,
                              args.seed, args.w_full, verbose=args.verbose)
    save_checkpoint(prior_to_checkpoint(prior), args.out)
    print('final_loss=%.10g' % (prior.final_loss))
    logger.info('Prior written to %s', args.out)


def prepare_inputs(config, verbose=False):
    """Demonstration and prior of an experiment, loaded or built.

    Returns:
        tuple: ``(demo, prior)``, each None when the mode does not use it.
    """
    demo, prior = None, None
    if config.uses_demo:
        if config.demo:
            demo = load_demonstration(config.demo)
        else:
            demo = default_demonstration(config.env)
        if demo.env_id != config.env:
            raise ConfigException('Demonstration was recorded in %s, not %s'
                                  % (demo.env_id, config.env))
    if config.uses_prior:
        if config.prior:
            prior = prior_from_checkpoint(load_checkpoint(config.prior))
            if config.latent_dim is not None and \
                    config.latent_dim != prior.latent_dim:
                raise ConfigException(
                    'Prior %s has latent_dim %d, expect %d' %
                    (config.prior, prior.latent_dim, config.latent_dim))
        else:
            latent_dim = config.latent_dim or \
                suggest_latent_dim(demo.action_dim)
            if latent_dim > demo.action_dim:
                raise ConfigException('latent_dim must be in [1, %d], got %d'
                                      % (demo.action_dim, latent_dim))
            prior = train_autoencoder(demo, latent_dim, config.prior_epochs,
                                      config.prior_lr, config.prior_seed,
                                      verbose=verbose)
        prior = prior.with_full_action_weight(config.full_action_weight())
    return demo, prior


def _reference_speed(demo):
    if demo is not None:
        return demo.reference_speed
    return None


def run_seed(config, seed, out, demo, prior, verbose=False):
    """Train and evaluate one seed; write its log and checkpoint.

    Returns:
        tuple: ``(seed, final deterministic task return, training log)``.
    """
    variant = config.variant()
    ref = _reference_speed(demo)
    factory = functools.partial(make_env, config.env, variant,
                                reference_speed=ref)
    result = train(factory, config.ppo_config(seed), prior, demo,
                   config.reward_weights(), verbose=verbose)
    report.write_training_log(
        os.path.join(out, 'logs', 'seed_%d.csv' % (seed)), result.log)
    save_checkpoint(policy_to_checkpoint(result.policy, config.env, variant,
                                         config.as_dict(), ref),
                    os.path.join(out, 'checkpoints',
                                 'policy_seed_%d.ckpt' % (seed)))
    episodes = evaluate(result.policy, make_env(config.env, variant,
                                                seed=seed,
                                                reference_speed=ref),
                        config.eval_episodes, deterministic=True, seed=seed)
    final = float(np.mean([e.task_return for e in episodes]))
    logger.info('Seed %d: final deterministic task return %.4f', seed, final)
    return seed, final, result.log


def _run_seed_task(task):
    return run_seed(*task)


def run_experiment(config, out, workers=1, verbose=False, command='train'):
    """Full ``train`` pipeline into ``out``.

    Returns:
        OrderedDict: seed to final deterministic task return.
    """
    for sub in ['logs', 'checkpoints', 'reports']:
        _makedirs(os.path.join(out, sub))
    write_config(config, os.path.join(out, 'config.ini'))
    write_manifest(os.path.join(out, 'manifest.ini'), command,
                   workers=workers)

    demo, prior = prepare_inputs(config, verbose)
    if prior is not None:
        save_checkpoint(prior_to_checkpoint(prior),
                        os.path.join(out, 'checkpoints', 'prior.ckpt'))

    tasks = [(config, seed, out, demo, prior, verbose and workers == 1)
             for seed in config.seeds]
    if workers > 1:
        pool = multiprocessing.Pool(workers)
        try:
            results = pool.map(_run_seed_task, tasks)
        finally:
            pool.close()
            pool.join()
    else:
        results = [_run_seed_task(t) for t in tasks]

    finals = collections.OrderedDict((seed, final)
                                     for seed, final, _ in results)
    report.write_csv(os.path.join(out, 'reports', 'seeds.csv'),
                     ['seed', 'final_task_return'],
                     [{'seed': s, 'final_task_return': f}
                      for s, f in finals.items()])
    report.write_csv(os.path.join(out, 'reports', 'summary.csv'),
                     report.SUMMARY_FIELDS,
                     report.summary_rows([(config.mode,
                                           list(finals.values()))]))
    series = [('seed %d' % (seed), [r['env_steps'] for r in log],
               [r['mean_task_return'] for r in log])
              for seed, _, log in results]
    report.write_svg(os.path.join(out, 'reports', 'returns.svg'),
                     report.line_chart(series, title='%s on %s' %
                                       (config.mode, config.env),
                                       x_label='environment steps',
                                       y_label='mean task return'))
    return finals


def _build_config(args):
    config = load_config(args.config, parse_overrides(args.set))
    return config, resolve_out(args.out, config.out)


def cmd_train(args):
    config, out = _build_config(args)
    finals = run_experiment(config, out, args.workers, args.verbose)
    summary = report.summarize(list(finals.values()))
    print('final_task_return mean=%.4f std=%.4f median=%.4f iqr=%.4f' %
          (summary['mean'], summary['std'], summary['median'],
           summary['iqr']))


def _sweep_values(param, texts, a_full):
    values = []
    for text in texts:
        try:
            v = float(text) if param == 'w_full' else int(text)
        except ValueError:
            raise ConfigException('Invalid %s value: %r' % (param, text))
        if param == 'w_full' and not 0.0 <= v <= 1.0:
            raise ConfigException('w_full values must be in [0, 1], got %r'
                                  % (v))
        if param == 'latent_dim' and not 1 <= v <= a_full:
            raise ConfigException('latent_dim values must be in [1, %d], '
                                  'got %r' % (a_full, v))
        values.append(v)
    return sorted(set(values))


def cmd_sweep(args):
    config, out = _build_config(args)
    if not config.uses_prior:
        raise ConfigException('Sweeps need a latent mode, got %s' %
                              (config.mode))
    a_full = make_env(config.env, config.variant()).spec.action_dim
    values = _sweep_values(args.param, args.values, a_full)
    _makedirs(os.path.join(out, 'reports'))

    groups = []
    for v in values:
        sub = os.path.join(out, '%s_%s' % (args.param, v))
        finals = run_experiment(config.replace(**{args.param: v}), sub,
                                args.workers, args.verbose, command='sweep')
        groups.append((v, list(finals.values())))

    rows = report.summary_rows(groups)
    report.write_csv(os.path.join(out, 'reports', 'sweep.csv'),
                     report.SUMMARY_FIELDS, rows)
    report.write_svg(os.path.join(out, 'reports', 'sweep.svg'),
                     report.bar_chart([str(r['label']) for r in rows],
                                      [r['mean'] for r in rows],
                                      [r['std'] for r in rows],
                                      title='Sensitivity to %s' % (args.param),
                                      y_label='final task return'))
    for r in rows:
        print('%s=%s mean=%.4f std=%.4f' % (args.param, r['label'],
                                            r['mean'], r['std']))


def cmd_eval(args):
    if args.episodes < 1:
        raise ConfigException('Number of episodes must be positive, got %d'
                              % (args.episodes))
    ckpt = load_checkpoint(args.policy)
    policy = policy_from_checkpoint(ckpt)
    env_id = args.env or ckpt.meta['env_id']
    variant = EnvVariant(**ckpt.meta['variant'])
    env = make_env(env_id, variant, seed=args.seed,
                   reference_speed=ckpt.meta.get('reference_speed'))
    if env.spec.obs_dim + policy.n_phase_channels != \
            policy.params.obs_dim:
        raise ConfigException('Policy expects %d observations, %s provides %d'
                              % (policy.params.obs_dim, env_id,
                                 env.spec.obs_dim))
    results = evaluate(policy, env, args.episodes,
                       deterministic=not args.stochastic, seed=args.seed)
    groups = [('task_return', [r.task_return for r in results]),
              ('style_return', [r.style_return for r in results]),
              ('length', [r.length for r in results])]
    rows = report.summary_rows(groups)
    report.write_csv(args.out, report.SUMMARY_FIELDS, rows)
    print('task_return mean=%.4f std=%.4f length=%.1f' %
          (rows[0]['mean'], rows[0]['std'], rows[2]['mean']))


def main(argv=None):
    args = arg_parser().parse_args(argv)
    logging.basicConfig(
        format='[%(asctime)s] %(levelname)s [%(filename)11s:%(lineno)4d]'
        ' %(message)s',
        level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        args.func(args)
    except INPUT_ERRORS as e:
        logger.error('%s', e)
        return EXIT_INPUT
    except (GaitPriorException, OSError) as e:
        logger.error('%s', e)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
