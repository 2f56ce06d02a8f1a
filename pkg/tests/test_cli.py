import io
import os
import sys

import pytest

TEST_ROOT = os.path.dirname(os.path.abspath(__file__))
PROJECT_ROOT = os.path.dirname(TEST_ROOT)
TEST_INPUT_DIR = os.path.join(TEST_ROOT, 'testing_inputs')

sys.path.insert(0, PROJECT_ROOT)

from gaitprior import cli, report
from gaitprior.checkpoint import load_checkpoint, prior_from_checkpoint
from gaitprior.config import OUT_ENV, ConfigException, load_config
from gaitprior.demo import load_demonstration
from gaitprior.ppo import LOG_FIELDS

CONFIG_PATH = os.path.join(TEST_INPUT_DIR, 'experiment.ini')
DEMO_PATH = os.path.join(TEST_INPUT_DIR, 'demo.json')

FAST = ['--config', CONFIG_PATH, '--set', 'eval_episodes=1']


def read_bytes(path):
    with io.open(path, 'rb') as f:
        return f.read()


def test_gen_demo(tmpdir):
    path = str(tmpdir.join('demo.json'))
    assert cli.main(['gen-demo', '--env', 'planar_hopper', '--out', path,
                     '--settle-cycles', '2']) == 0
    demo = load_demonstration(path)
    assert demo.env_id == 'planar_hopper'
    assert demo.n_frames == 100

    osc = os.path.join(TEST_INPUT_DIR, 'oscillator.json')
    assert cli.main(['gen-demo', '--oscillator', osc, '--out', path]) == 0
    assert load_demonstration(path).n_frames == 25


def test_analyze(tmpdir, capsys):
    csv_path = str(tmpdir.join('pca.csv'))
    svg_path = str(tmpdir.join('pca.svg'))
    assert cli.main(['analyze', DEMO_PATH, '--out', csv_path,
                     '--svg', svg_path]) == 0
    rows = report.read_csv(csv_path)
    assert len(rows) == 4
    assert rows[-1]['cumulative'] == pytest.approx(1.0)
    assert read_bytes(svg_path).startswith(b'<svg')
    out = capsys.readouterr().out
    assert 'suggested_latent_dim=2' in out


def test_train_prior(tmpdir, capsys):
    path = str(tmpdir.join('prior.ckpt'))
    assert cli.main(['train-prior', DEMO_PATH, '--epochs', '50',
                     '--w-full', '0.4', '--out', path]) == 0
    prior = prior_from_checkpoint(load_checkpoint(path))
    assert prior.latent_dim == 2
    assert prior.full_action_weight == 0.4
    assert len(prior.loss_history) == 51
    assert 'final_loss=' in capsys.readouterr().out

    assert cli.main(['train-prior', DEMO_PATH, '--latent-dim', '5',
                     '--out', path]) == cli.EXIT_INPUT


def test_train_layout(tmpdir):
    out = str(tmpdir.join('run'))
    assert cli.main(['train'] + FAST + ['--out', out]) == 0
    for name in ['config.ini', 'manifest.ini', 'logs/seed_3.csv',
                 'logs/seed_4.csv', 'checkpoints/prior.ckpt',
                 'checkpoints/policy_seed_3.ckpt',
                 'checkpoints/policy_seed_4.ckpt', 'reports/seeds.csv',
                 'reports/summary.csv', 'reports/returns.svg']:
        assert os.path.isfile(os.path.join(out, name)), name

    log = report.read_csv(os.path.join(out, 'logs', 'seed_3.csv'))
    assert list(log[0]) == LOG_FIELDS
    assert [row['env_steps'] for row in log] == [64, 128]

    seeds = report.read_csv(os.path.join(out, 'reports', 'seeds.csv'))
    assert [row['seed'] for row in seeds] == [3, 4]
    summary = report.read_csv(os.path.join(out, 'reports', 'summary.csv'))
    assert summary[0]['label'] == 'ppo_latent_style'
    assert summary[0]['n'] == 2

    prior = prior_from_checkpoint(
        load_checkpoint(os.path.join(out, 'checkpoints', 'prior.ckpt')))
    assert prior.full_action_weight == 0.3

    eval_path = str(tmpdir.join('eval.csv'))
    assert cli.main(['eval', os.path.join(out, 'checkpoints',
                                          'policy_seed_3.ckpt'),
                     '--episodes', '2', '--out', eval_path]) == 0
    rows = report.read_csv(eval_path)
    assert [row['label'] for row in rows] == ['task_return', 'style_return',
                                              'length']
    assert rows[2]['mean'] == 500


def test_train_deterministic(tmpdir):
    outs = [str(tmpdir.join('a')), str(tmpdir.join('b')),
            str(tmpdir.join('c'))]
    assert cli.main(['train'] + FAST + ['--out', outs[0]]) == 0
    assert cli.main(['train'] + FAST + ['--out', outs[1]]) == 0
    assert cli.main(['train'] + FAST + ['--out', outs[2],
                                        '--workers', '2']) == 0
    for seed in [3, 4]:
        name = os.path.join('logs', 'seed_%d.csv' % (seed))
        logs = [read_bytes(os.path.join(out, name)) for out in outs]
        assert logs[0] == logs[1] == logs[2]


def test_output_root_from_environment(tmpdir, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmpdir))
    assert cli.main(['train'] + FAST + ['--set', 'mode=ppo',
                                        '--set', 'seeds=0']) == 0
    assert os.path.isfile(str(tmpdir.join('logs', 'seed_0.csv')))
    assert not os.path.exists(str(tmpdir.join('checkpoints', 'prior.ckpt')))


def test_sweep(tmpdir):
    out = str(tmpdir.join('sweep'))
    assert cli.main(['sweep'] + FAST + ['--set', 'seeds=0', '--param',
                                        'w_full', '--values', '1.0', '0',
                                        '--out', out]) == 0
    rows = report.read_csv(os.path.join(out, 'reports', 'sweep.csv'))
    assert [row['label'] for row in rows] == [0.0, 1.0]
    assert os.path.isfile(os.path.join(out, 'w_full_0.0', 'logs',
                                       'seed_0.csv'))
    assert os.path.isfile(os.path.join(out, 'reports', 'sweep.svg'))

    assert cli.main(['sweep'] + FAST + ['--param', 'w_full', '--values',
                                        '1.5', '--out', out]) == \
        cli.EXIT_INPUT
    assert cli.main(['sweep'] + FAST + ['--param', 'latent_dim', '--values',
                                        '5', '--out', out]) == cli.EXIT_INPUT
    assert cli.main(['sweep'] + FAST + ['--set', 'mode=ppo', '--param',
                                        'w_full', '--values', '0.5',
                                        '--out', out]) == cli.EXIT_INPUT


def test_sweep_with_fixed_prior(tmpdir):
    ckpt = str(tmpdir.join('prior.ckpt'))
    assert cli.main(['train-prior', DEMO_PATH, '--latent-dim', '2',
                     '--epochs', '20', '--out', ckpt]) == 0

    # one checkpoint cannot stand for several latent sizes
    out = str(tmpdir.join('sweep'))
    assert cli.main(['sweep'] + FAST + ['--set', 'prior=' + ckpt,
                                        '--param', 'latent_dim',
                                        '--values', '1', '2',
                                        '--out', out]) == cli.EXIT_INPUT

    config = load_config(CONFIG_PATH, {'prior': ckpt, 'latent_dim': 2})
    demo, prior = cli.prepare_inputs(config)
    assert prior.latent_dim == 2
    with pytest.raises(ConfigException):
        cli.prepare_inputs(config.replace(latent_dim=1))


def test_exit_codes(tmpdir):
    out = str(tmpdir.join('run'))
    assert cli.main(['train', '--set', 'mode=sac', '--out', out]) == \
        cli.EXIT_INPUT
    assert cli.main(['train', '--set', 'env=point_gait',
                     '--set', 'any_direction=true', '--out', out]) == \
        cli.EXIT_INPUT
    assert cli.main(['analyze', os.path.join(TEST_INPUT_DIR, 'demo_nan.json'),
                     '--out', str(tmpdir.join('pca.csv'))]) == cli.EXIT_INPUT
    assert cli.main(['eval', DEMO_PATH, '--out',
                     str(tmpdir.join('eval.csv'))]) == cli.EXIT_INPUT

    # diverging prior training
    assert cli.main(['train-prior', DEMO_PATH, '--lr', 'inf', '--out',
                     str(tmpdir.join('prior.ckpt'))]) == cli.EXIT_RUNTIME
    assert cli.main(['eval', str(tmpdir.join('missing.ckpt')), '--out',
                     str(tmpdir.join('eval.csv'))]) == cli.EXIT_RUNTIME

    with pytest.raises(SystemExit) as e:
        cli.main(['train', '--workers'])
    assert e.value.code == 2
