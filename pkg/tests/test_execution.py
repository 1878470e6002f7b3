import json
from os.path import exists, join, dirname
import numpy as np
import pytest

from optima.exceptions import ConfigError
from optima.data.dataset import Dataset
from optima.distributions.gaussian import LOG_STD_MIN
from optima.execution.arguments import RunArguments
from optima.execution.config import RunConfig, DEFAULTS
from optima.execution.runs import arm_seed, arm_setup, build_spec, generate_data
from optima.execution.commands import main, worker_count
from optima.distributions.noise import NoiseSource
from optima.models.prediction import predict
from optima.metrics.calibration import PredictionLog, basic_metrics
from optima.training.trainer import train_full_vi


REGRESSION_CONFIG = join(dirname(__file__), '..', 'configs', 'synthetic_regression.json')


SMALL = {
    'data': {'n_train': 12, 'n_test': 20, 'seed': 1},
    'model': {'layer_sizes': [1, 8, 1], 'activations': ['tanh']},
    'train': {'lr_net': 0.01, 'epochs': 2, 'batch_size': 6, 'log_every': 1,
              'mc': {'s_gamma': 2, 'k_naive': 2}},
    'eval': {'n_mc_samples': 5},
    'baselines': [{'arm': 'naive-aug', 'K': 2}]}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(SMALL))
    return str(path)


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv('OPTIMA_THREADS', '1')


class TestRunConfig:

    def test_defaults(self):
        config = RunConfig.from_dict({})
        assert config.train['epochs'] == DEFAULTS['train']['epochs']
        assert config.arms == ['optima']

    @pytest.mark.parametrize('values, path', [
        ({'train': {'lr': 0.1}}, 'train.lr'),
        ({'train': {'mc': {'s_x': 1}}}, 'train.mc.s_x'),
        ({'train': {'epochs': 'ten'}}, 'train.epochs'),
        ({'model': {'bayes_last_layer': 1}}, 'model.bayes_last_layer'),
        ({'data': {'generator': 'mnist'}}, 'data.generator'),
        ({'data': {'generator': 'file'}}, 'data.train_path'),
        ({'eval': {'delta': 1.5}}, 'eval.delta'),
        ({'augmentation': {'scale_spread': 0.}}, 'augmentation.scale_spread'),
        ({'baselines': [{'arm': 'no-aug'}, {'arm': 'no-aug'}]}, 'baselines[1].arm'),
        ({'baselines': [{'arm': 'no-aug', 'seed': 2}]}, 'baselines[0].seed')])
    def test_violations(self, values, path):
        with pytest.raises(ConfigError) as error:
            RunConfig.from_dict(values)
        assert error.value.path == path

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(str(tmp_path / 'missing.json'))

    def test_round_trip_and_seed(self):
        config = RunConfig.from_dict(SMALL)
        assert RunConfig.from_dict(config.to_dict()).to_dict() == config.to_dict()
        reseeded = config.with_seed(9)
        assert reseeded.data['seed'] == 9 and reseeded.train['seed'] == 9
        assert config.data['seed'] == 1

    def test_arm_order(self):
        config = RunConfig.from_dict({'baselines': [{'arm': 'naive-aug'}, {'arm': 'no-aug'}]})
        assert config.arms == ['no-aug', 'naive-aug', 'optima']


class TestArms:

    def _setup(self, arm, baselines=({'arm': 'fixed-aug'}, {'arm': 'naive-aug', 'K': 3})):
        config = RunConfig.from_dict(dict(SMALL, baselines=list(baselines)))
        train, _ = generate_data(config)
        return config, arm_setup(config, arm, train)

    def test_seeds_differ(self):
        config = RunConfig.from_dict(SMALL)
        seeds = {arm_seed(config, arm) for arm in ('no-aug', 'fixed-aug', 'naive-aug', 'optima')}
        assert len(seeds) == 4

    def test_optima(self):
        _, (_, family, q_phi, train_config, learn_phi) = self._setup('optima')
        assert family.kind == 'additive-shift'
        assert learn_phi and train_config.estimator == 'marginalized'

    def test_no_aug(self):
        _, (_, family, q_phi, _, learn_phi) = self._setup('no-aug')
        assert family.kind == 'none' and q_phi.dim == 0
        assert not learn_phi

    def test_fixed_aug(self):
        """ Fixed Aug freezes q(phi) at a point mass on its initial mean. """
        _, (_, _, q_phi, train_config, learn_phi) = self._setup('fixed-aug')
        np.testing.assert_array_equal(q_phi.log_std, np.full(q_phi.dim, LOG_STD_MIN))
        assert train_config.lr_aug == 0. and not learn_phi

    def test_naive_aug(self):
        _, (_, _, _, train_config, _) = self._setup('naive-aug')
        assert train_config.estimator == 'naive'
        assert train_config.mc.k_naive == 3

    def test_shipped_regression_config(self):
        """ The regression setup learns only the scale of a zero-mean shift; baselines freeze it at 0.1. """
        config = RunConfig.load(REGRESSION_CONFIG)
        train, _ = generate_data(config)
        _, family, q_phi, _, learn_phi = arm_setup(config, 'optima', train)
        assert family.kind == 'gaussian-shift' and q_phi.dim == 1 and learn_phi
        _, family, q_phi, _, learn_phi = arm_setup(config, 'fixed-aug', train)
        np.testing.assert_allclose(family.summary(q_phi.mean)['shift_std'], 0.1)
        assert not learn_phi

    def test_spec_mismatch(self):
        config = RunConfig.from_dict(dict(SMALL, model={'layer_sizes': [2, 8, 1]}))
        train, _ = generate_data(config)
        with pytest.raises(ConfigError):
            build_spec(config, train)
        classification = Dataset(np.zeros((4, 1)), [0, 1, 2, 0], 'classification')
        with pytest.raises(ConfigError):
            build_spec(RunConfig.from_dict(SMALL), classification)


class TestArguments:

    def test_checks(self):
        args = RunArguments(['verify', '-k', 'shrinkage, jensen-gap', '-l'])
        assert args['checks'] == ['shrinkage', 'jensen-gap']
        assert args['list'] is True
        assert args['seed'] is None

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            RunArguments(['fit'])

    def test_worker_count(self, monkeypatch):
        assert worker_count(5) == 1
        monkeypatch.setenv('OPTIMA_THREADS', 'many')
        with pytest.raises(ConfigError):
            worker_count(5)


class TestMain:

    def test_verify_list(self, capsys):
        assert main(['verify', '--list']) == 0
        output = capsys.readouterr().out
        assert 'shrinkage' in output and 'diagnostic' in output

    def test_verify(self, tmp_path, capsys):
        assert main(['verify', '-k', 'shrinkage', '-o', str(tmp_path)]) == 0
        assert 'SHRINKAGE' in capsys.readouterr().out
        with open(join(str(tmp_path), 'verify.json')) as file:
            assert json.load(file)[0]['status'] == 'pass'

    def test_unknown_check(self):
        assert main(['verify', '-k', 'no-such-check']) == 2

    def test_missing_config(self):
        assert main(['train']) == 2

    def test_invalid_config(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'train': {'learning_rate': 0.1}}))
        assert main(['gen-data', '-c', str(path), '-o', str(tmp_path)]) == 2

    def test_eval_before_train(self, tmp_path, config_path):
        assert main(['eval', '-c', config_path, '-o', str(tmp_path / 'run')]) == 2

    def test_gen_data_reproducible(self, tmp_path, config_path):
        """ Regenerating data with the same configuration rewrites identical bytes. """
        first, second = str(tmp_path / 'a'), str(tmp_path / 'b')
        assert main(['gen-data', '-c', config_path, '-o', first]) == 0
        assert main(['gen-data', '-c', config_path, '-o', second]) == 0
        for name in ('train.csv', 'test.csv'):
            with open(join(first, 'data', name), 'rb') as a, open(join(second, 'data', name), 'rb') as b:
                assert a.read() == b.read()

    def test_seed_override(self, tmp_path, config_path):
        out = str(tmp_path / 'run')
        assert main(['gen-data', '-c', config_path, '-o', out, '-s', '4']) == 0
        with open(join(out, 'data', 'train.csv')) as file:
            assert ' seed=4 ' in file.readline()

    def test_pipeline(self, tmp_path, config_path):
        out = str(tmp_path / 'run')
        for command in ('gen-data', 'train', 'eval', 'report'):
            assert main([command, '-c', config_path, '-o', out]) == 0

        for arm in ('naive-aug', 'optima'):
            for name in ('checkpoint.json', 'trace.csv', 'config.json'):
                assert exists(join(out, arm, name))
        with open(join(out, 'report.json')) as file:
            report = json.load(file)
        assert list(report['arms']) == ['naive-aug', 'optima']
        assert report['task'] == 'regression'
        optima = report['arms']['optima']
        assert {'mse', 'train_mse', 'variance_mean', 'ood_auroc'} <= set(optima['metrics'])
        assert 0. <= optima['metrics']['ood_auroc'] <= 1.
        assert optima['pac_bayes']['kl_phi'] > 0
        assert report['arms']['naive-aug']['pac_bayes']['kl_phi'] == 0
        assert len(optima['trajectory']['step']) == 4
        assert report['seeds']['arms']['optima'] != report['seeds']['arms']['naive-aug']

        assert exists(join(out, 'summary.md')) and exists(join(out, 'curves.svg'))
        assert not exists(join(out, 'reliability.svg'))


@pytest.mark.slow
class TestRegressionReproduction:

    def test_five_seeds(self):
        """ Over five seeds the learned shift scale widens into [0.12, 0.25] and beats No Aug on median test MSE. """
        base = RunConfig.load(REGRESSION_CONFIG)
        sigmas, mse = [], {'optima': [], 'no-aug': []}
        for seed in range(5):
            config = base.with_seed(seed)
            train, test = generate_data(config)
            for arm in mse:
                spec, family, q_phi, train_config, _ = arm_setup(config, arm, train)
                state, q_phi, _ = train_full_vi(train, spec, family, q_phi, train_config)
                mean, variance = predict(state, test.inputs, n_samples=config.eval['n_mc_samples'],
                                         noise=NoiseSource(seed).child('eval'))
                mse[arm].append(basic_metrics(PredictionLog.regression(mean, variance, test.targets))['mse'])
                if arm == 'optima':
                    sigmas.append(family.summary(q_phi.mean)['shift_std'])
        assert all(0.12 <= sigma <= 0.25 for sigma in sigmas), sigmas
        assert np.median(mse['optima']) < np.median(mse['no-aug']), mse
