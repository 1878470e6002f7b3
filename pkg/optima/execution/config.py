import json
from copy import deepcopy
from collections import OrderedDict
import numpy as np

from ..exceptions import ConfigError
from ..augmentation.families import KINDS
from ..elbo.estimators import ESTIMATORS
from ..data.corruption import CORRUPTIONS
from ..training.trainer import TrainConfig


GENERATORS = ('synthetic-regression', 'glyphs', 'file')
METHODS = ('full-vi', 'partial-vi')
BASELINE_ARMS = ('no-aug', 'fixed-aug', 'naive-aug')
ARM_LABELS = OrderedDict([('no-aug', 'No Aug'),
                          ('fixed-aug', 'Fixed Aug'),
                          ('naive-aug', 'Naive Aug'),
                          ('optima', 'OPTIMA')])


# ============================== DEFAULTS =====================================


DEFAULTS = OrderedDict(
    data=OrderedDict(
        generator='synthetic-regression',
        n_train=50,
        n_test=1000,
        seed=0,
        size=16,
        n_classes=4,
        pose_jitter=0.5,
        train_path=None,
        test_path=None),
    model=OrderedDict(
        layer_sizes=[1, 50, 1],
        activations=None,
        noise_std=0.2,
        bayes_last_layer=True,
        bayes_all_layers=False,
        method='full-vi'),
    augmentation=OrderedDict(
        kind='additive-shift',
        sigma_init=0.1,
        prior_scale=0.2,
        q_log_std=float(np.log(0.1)),
        temperature=0.5,
        transforms=None,
        alpha_init=0.2,
        scale_spread=0.5),
    train=OrderedDict(
        lr_net=1e-4,
        lr_aug=1e-2,
        beta_net=0.1,
        beta_aug=1.,
        epochs=100,
        batch_size=50,
        mc=OrderedDict(s_gamma=4, k_naive=5, s_theta=1, s_phi=1),
        clip_norm=1.,
        seed=0,
        log_every=10,
        estimator='marginalized',
        prior_std=1.,
        test_samples=10),
    eval=OrderedDict(
        n_mc_samples=100,
        marginalize_aug=False,
        corruption=None,
        severity=1.,
        delta=0.05),
    baselines=[])

BASELINE_DEFAULTS = OrderedDict(arm=None, K=5)


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_type(default, value, path):
    if default is None or value is None:
        return
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError('expected a boolean', path)
    elif isinstance(default, int):
        if not _is_number(value) or int(value) != value:
            raise ConfigError('expected an integer', path)
    elif isinstance(default, float):
        if not _is_number(value):
            raise ConfigError('expected a number', path)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError('expected a string', path)
    elif isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError('expected a list', path)


def _merge(defaults, values, path=''):
    """ Returns <defaults> updated with <values>, rejecting unknown keys. """
    if not isinstance(values, dict):
        raise ConfigError('expected an object', path)
    merged = deepcopy(defaults)
    for key, value in values.items():
        child = '{:s}.{:s}'.format(path, key) if path else key
        if key not in defaults:
            raise ConfigError('unknown key', child)
        if isinstance(defaults[key], dict):
            merged[key] = _merge(defaults[key], value, child)
        else:
            _check_type(defaults[key], value, child)
            merged[key] = value
    return merged


def _choice(value, options, path):
    if value not in options:
        raise ConfigError('"{}" is not one of {}'.format(value, ', '.join(options)), path)


class RunConfig:
    """
    Resolved run configuration.

    Attributes:

        data (dict) - generator name and parameters, or train/test file paths

        model (dict) - network settings; input and output sizes must match the data

        augmentation (dict) - family kind and its initialization and prior

        train (dict) - TrainConfig settings

        eval (dict) - evaluation settings

        baselines (list of dict) - baseline arms, each {'arm': ..., 'K': ...}

    """

    def __init__(self, data, model, augmentation, train, eval, baselines):
        self.data = data
        self.model = model
        self.augmentation = augmentation
        self.train = train
        self.eval = eval
        self.baselines = baselines
        self.validate()

    @classmethod
    def from_dict(cls, values):
        """ Resolve <values> against the defaults. Raises ConfigError on schema violations. """
        merged = _merge(DEFAULTS, values)
        baselines = []
        for i, entry in enumerate(merged['baselines']):
            baselines.append(_merge(BASELINE_DEFAULTS, entry, 'baselines[{:d}]'.format(i)))
        return cls(merged['data'], merged['model'], merged['augmentation'],
                   merged['train'], merged['eval'], baselines)

    @staticmethod
    def load(path):
        """ Load configuration from JSON file at <path>. """
        try:
            with open(path, 'r') as file:
                values = json.load(file, object_pairs_hook=OrderedDict)
        except (OSError, ValueError) as error:
            raise ConfigError('cannot read configuration ({})'.format(error)) from None
        return RunConfig.from_dict(values)

    def to_dict(self):
        return OrderedDict(data=deepcopy(self.data),
                           model=deepcopy(self.model),
                           augmentation=deepcopy(self.augmentation),
                           train=deepcopy(self.train),
                           eval=deepcopy(self.eval),
                           baselines=deepcopy(self.baselines))

    def with_seed(self, seed):
        """ Returns a copy whose data and training seeds are <seed>. """
        values = self.to_dict()
        values['data']['seed'] = int(seed)
        values['train']['seed'] = int(seed)
        return RunConfig.from_dict(values)

    def validate(self):
        """ Check values that the type schema cannot express. """
        _choice(self.data['generator'], GENERATORS, 'data.generator')
        if self.data['generator'] == 'file':
            for key in ('train_path', 'test_path'):
                if not self.data[key]:
                    raise ConfigError('required for file data', 'data.' + key)
        for key in ('n_train', 'n_test', 'n_classes'):
            if self.data[key] < 1:
                raise ConfigError('must be positive', 'data.' + key)

        _choice(self.model['method'], METHODS, 'model.method')
        sizes = self.model['layer_sizes']
        if len(sizes) < 2 or not all(_is_number(s) and int(s) == s and s > 0 for s in sizes):
            raise ConfigError('expected at least two positive integers', 'model.layer_sizes')
        _choice(self.augmentation['kind'], KINDS, 'augmentation.kind')
        for key in ('sigma_init', 'prior_scale', 'scale_spread'):
            if not self.augmentation[key] > 0:
                raise ConfigError('must be positive', 'augmentation.' + key)
        _choice(self.train['estimator'], ESTIMATORS, 'train.estimator')
        try:
            self.train_config()
        except ValueError as error:
            raise ConfigError(str(error), 'train') from None

        if self.eval['n_mc_samples'] < 1:
            raise ConfigError('must be positive', 'eval.n_mc_samples')
        if self.eval['corruption'] is not None:
            _choice(self.eval['corruption'], CORRUPTIONS, 'eval.corruption')
        if self.eval['severity'] < 0:
            raise ConfigError('must be non-negative', 'eval.severity')
        if not 0 < self.eval['delta'] < 1:
            raise ConfigError('must lie in (0, 1)', 'eval.delta')

        seen = set()
        for i, entry in enumerate(self.baselines):
            path = 'baselines[{:d}]'.format(i)
            _choice(entry['arm'], BASELINE_ARMS, path + '.arm')
            if entry['arm'] in seen:
                raise ConfigError('duplicate arm', path + '.arm')
            seen.add(entry['arm'])
            if entry['K'] < 1:
                raise ConfigError('must be positive', path + '.K')

    def train_config(self):
        """ Returns TrainConfig built from the train section. """
        return TrainConfig.from_dict(self.train)

    @property
    def arms(self):
        """ Arm names in run order, baselines first. """
        configured = [entry['arm'] for entry in self.baselines]
        return [arm for arm in ARM_LABELS if arm in configured] + ['optima']

    def baseline(self, arm):
        """ Returns the baseline entry of <arm>. """
        for entry in self.baselines:
            if entry['arm'] == arm:
                return entry
        raise KeyError(arm)
