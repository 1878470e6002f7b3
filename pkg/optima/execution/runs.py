import json
import logging
from os.path import join, exists
from os import makedirs
from time import time
from collections import OrderedDict
import numpy as np

from .. import __version__
from ..exceptions import ConfigError, TrainingError
from ..distributions.noise import NoiseSource
from ..distributions.gaussian import DiagonalGaussian, LOG_STD_MIN, kl_diagonal_gaussians
from ..augmentation.families import default_family
from ..models.network import NetworkSpec
from ..models.checkpoint import Checkpoint
from ..models.prediction import predict
from ..training.trainer import TrainConfig, train_full_vi, train_partial_vi
from ..training.trace import TrainTrace
from ..metrics.calibration import (PredictionLog, expected_calibration_error,
                                   predictive_entropy, auroc, basic_metrics)
from ..elbo.bounds import bounded_risk, complexity_term, pac_bayes_bound
from ..data.generators import gen_synthetic_regression
from ..data.glyphs import gen_glyph_classification
from ..data.corruption import corrupt_dataset
from ..data.io import read_csv, write_csv
from .config import RunConfig, ARM_LABELS


logger = logging.getLogger(__name__)

ARM_SEED_STRIDE = 1000
TEST_SEED_OFFSET = 10**6


# ================================= DATA ======================================


def generate_data(config):
    """ Returns (train, test) datasets drawn by the configured generator. """
    data = config.data
    if data['generator'] == 'synthetic-regression':
        return gen_synthetic_regression(data['n_train'], data['n_test'], data['seed'])
    if data['generator'] == 'glyphs':
        kwargs = dict(size=data['size'], n_classes=data['n_classes'],
                      pose_jitter=data['pose_jitter'])
        train = gen_glyph_classification(data['n_train'], seed=data['seed'], **kwargs)
        test = gen_glyph_classification(data['n_test'], seed=data['seed'] + TEST_SEED_OFFSET, **kwargs)
        return train, test
    raise ConfigError('file data cannot be generated', 'data.generator')


def data_paths(config, out_dir):
    """ Returns (train path, test path). """
    if config.data['generator'] == 'file':
        return config.data['train_path'], config.data['test_path']
    return join(out_dir, 'data', 'train.csv'), join(out_dir, 'data', 'test.csv')


def write_data(config, out_dir):
    """ Generate and write datasets. Returns (train, test). """
    train, test = generate_data(config)
    train_path, test_path = data_paths(config, out_dir)
    write_csv(train_path, train)
    write_csv(test_path, test)
    return train, test


def load_data(config, out_dir):
    """ Read datasets, generating them first if a generator is configured and the files are absent. """
    train_path, test_path = data_paths(config, out_dir)
    if config.data['generator'] != 'file' and not (exists(train_path) and exists(test_path)):
        logger.info('Data files missing, generating them in %s.', join(out_dir, 'data'))
        write_data(config, out_dir)
    return read_csv(train_path), read_csv(test_path)


# ================================= ARMS ======================================


def arm_seed(config, arm):
    """ Independent training seed of each arm. """
    return config.train['seed'] + ARM_SEED_STRIDE * list(ARM_LABELS).index(arm)


def build_spec(config, dataset):
    """ Returns the NetworkSpec of <config> for inputs and targets of <dataset>. """
    model = config.model
    sizes = list(model['layer_sizes'])
    if sizes[0] != int(np.prod(dataset.input_shape)):
        raise ConfigError('input width {} does not match data shape {}'.format(
            sizes[0], dataset.input_shape), 'model.layer_sizes')
    if dataset.task == 'classification':
        head, n_classes = 'categorical', dataset.n_classes
        if sizes[-1] != n_classes:
            raise ConfigError('output width must equal {:d} classes'.format(n_classes),
                              'model.layer_sizes')
    else:
        head, n_classes = 'gaussian', None
        if sizes[-1] != 1:
            raise ConfigError('regression needs output width 1', 'model.layer_sizes')
    try:
        return NetworkSpec(sizes, activations=model['activations'], head=head,
                           noise_std=model['noise_std'], n_classes=n_classes,
                           bayes_last_layer=model['bayes_last_layer'],
                           bayes_all_layers=model['bayes_all_layers'],
                           input_shape=dataset.input_shape)
    except ValueError as error:
        raise ConfigError(str(error), 'model') from None


def arm_setup(config, arm, dataset):
    """
    Builds the network, augmentation and optimization settings of one arm.

    No Aug uses the identity family. Fixed Aug freezes q(phi) at its initial mean. Naive Aug additionally trains on K replicas with the mean-of-logs objective.

    Args:

        config (RunConfig)

        arm (str) - 'optima', 'no-aug', 'fixed-aug' or 'naive-aug'

        dataset (Dataset) - training data

    Returns:

        spec (NetworkSpec)

        family (AugmentationFamily)

        q_phi (DiagonalGaussian)

        train_config (TrainConfig)

        learn_phi (bool) - True if q(phi) is optimized

    """
    if arm not in ARM_LABELS:
        raise ValueError('Unknown arm "{}".'.format(arm))
    aug = config.augmentation
    kind = 'none' if arm == 'no-aug' else aug['kind']
    family, q_phi, _ = default_family(kind, dataset.input_shape,
                                      sigma_init=aug['sigma_init'],
                                      prior_scale=aug['prior_scale'],
                                      q_log_std=aug['q_log_std'],
                                      temperature=aug['temperature'],
                                      transforms=aug['transforms'],
                                      alpha_init=aug['alpha_init'],
                                      scale_spread=aug['scale_spread'])
    train = dict(config.train, seed=arm_seed(config, arm))
    train['mc'] = dict(train['mc'])
    if arm in ('fixed-aug', 'naive-aug') and q_phi.dim:
        q_phi = DiagonalGaussian(q_phi.mean, LOG_STD_MIN)
        train.update(lr_aug=0., beta_aug=0.)
    if arm == 'naive-aug':
        train['estimator'] = 'naive'
        train['mc']['k_naive'] = config.baseline(arm)['K']
    train_config = TrainConfig.from_dict(train)
    learn_phi = arm == 'optima' and q_phi.dim > 0 and train_config.lr_aug > 0
    spec = build_spec(config, dataset)
    if config.model['method'] == 'full-vi' and not spec.is_bayesian:
        raise ConfigError('full-vi needs a stochastic layer', 'model.bayes_last_layer')
    return spec, family, q_phi, train_config, learn_phi


def train_arm(task):
    """
    Trains one arm and writes its checkpoint, trace and resolved configuration.

    Args:

        task (dict) - 'config' (RunConfig dict), 'arm', 'out_dir', 'train_path', 'test_path'

    Returns:

        summary (dict) - arm, steps and runtime

    """
    start = time()
    config = RunConfig.from_dict(task['config'])
    arm = task['arm']
    train, test = read_csv(task['train_path']), read_csv(task['test_path'])
    spec, family, q_phi, train_config, learn_phi = arm_setup(config, arm, train)
    arm_dir = join(task['out_dir'], arm)
    makedirs(arm_dir, exist_ok=True)

    trainer = train_full_vi if config.model['method'] == 'full-vi' else train_partial_vi
    logger.info('Training %s with %s.', ARM_LABELS[arm], config.model['method'])
    try:
        state, q_phi, trace = trainer(train, spec, family, q_phi, train_config, test=test)
    except TrainingError as error:
        if error.trace is not None:
            error.trace.save(join(arm_dir, 'trace.csv'))
        raise

    n_batches = int(np.ceil(train.size / train_config.batch_size))
    metadata = OrderedDict(arm=arm, label=ARM_LABELS[arm], seed=train_config.seed,
                           learn_phi=learn_phi, prior_std=train_config.prior_std,
                           data_digest=train.digest(), version=__version__)
    checkpoint = Checkpoint(state, family, q_phi, step=train_config.epochs * n_batches,
                            task=train.task, metadata=metadata)
    checkpoint.save(join(arm_dir, 'checkpoint.json'))
    trace.save(join(arm_dir, 'trace.csv'))
    with open(join(arm_dir, 'config.json'), 'w') as file:
        json.dump(config.to_dict(), file, indent=1)
    return dict(arm=arm, steps=checkpoint.step, runtime=time() - start)


# =============================== EVALUATION ==================================


def _predictions(checkpoint, dataset, config, key):
    n_samples = config.eval['n_mc_samples']
    noise = NoiseSource(checkpoint.metadata.get('seed', 0)).child('eval', key)
    return predict(checkpoint.state, dataset.inputs, n_samples=n_samples, noise=noise,
                   marginalize_aug=config.eval['marginalize_aug'],
                   family=checkpoint.family, q_phi=checkpoint.q_phi)


def _log(task, predictions, targets):
    if task == 'classification':
        return PredictionLog.classification(predictions, targets)
    return PredictionLog.regression(*predictions, targets)


def _ood_scores(task, predictions):
    """ Predictive entropy for classification, summed predictive variance for regression. """
    if task == 'classification':
        return predictive_entropy(predictions)
    return predictions[1].reshape(len(predictions[1]), -1).sum(axis=1)


def default_corruption(dataset):
    return 'extra-rotation' if len(dataset.input_shape) == 2 else 'mean-shift'


def pac_bayes_summary(checkpoint, train, train_predictions, delta):
    """ PAC-Bayes bound with the bounded training risk and KL of every learned posterior. """
    state = checkpoint.state
    prediction = train_predictions if train.task == 'classification' else train_predictions[0]
    risk = bounded_risk(train.task, prediction, train.targets)
    kl_theta = 0.
    if state.theta_dim:
        prior = DiagonalGaussian.standard(state.theta_dim, checkpoint.metadata.get('prior_std', 1.))
        kl_theta = kl_diagonal_gaussians(state.q_theta(), prior)
    kl_phi = 0.
    if checkpoint.metadata.get('learn_phi', False):
        kl_phi = kl_diagonal_gaussians(checkpoint.q_phi, checkpoint.family.phi_prior)
    kl_total = kl_theta + kl_phi
    return OrderedDict(empirical_risk=risk, kl_theta=kl_theta, kl_phi=kl_phi,
                       kl_total=kl_total, delta=delta,
                       complexity=complexity_term(kl_total, train.size, delta),
                       bound=pac_bayes_bound(risk, kl_total, train.size, delta))


def trajectory(trace):
    """ Returns trace columns as JSON-ready lists. """
    frame = trace.to_frame()
    columns = OrderedDict()
    for column in frame.columns:
        values = frame[column].to_numpy(dtype=np.float64)
        columns[column] = [None if np.isnan(v) else float(v) for v in values]
    return columns


def evaluate_arm(config, checkpoint, train, test, trace=None):
    """
    Evaluation metrics of one trained arm.

    Args:

        config (RunConfig)

        checkpoint (Checkpoint)

        train (Dataset)

        test (Dataset) - clean test data; its corruption is the out-of-distribution set

        trace (TrainTrace) - optional training trace

    Returns:

        result (OrderedDict) - metrics, reliability table, PAC-Bayes values and trajectory

    """
    if checkpoint.task != test.task or checkpoint.task != train.task:
        raise ConfigError('checkpoint task "{}" does not match data task "{}"'.format(
            checkpoint.task, test.task), 'data')
    task = test.task
    test_predictions = _predictions(checkpoint, test, config, 'test')
    train_predictions = _predictions(checkpoint, train, config, 'train')
    log = _log(task, test_predictions, test.targets)

    metrics = OrderedDict(basic_metrics(log))
    for key, value in basic_metrics(_log(task, train_predictions, train.targets)).items():
        metrics['train_' + key] = value
    reliability = None
    if task == 'classification':
        metrics['ece'], table = expected_calibration_error(log)
        reliability = table.to_dict()
        entropy = predictive_entropy(test_predictions)
        metrics['entropy_mean'] = float(np.mean(entropy))
        metrics['entropy_std'] = float(np.std(entropy))
    else:
        metrics['variance_mean'] = float(np.mean(test_predictions[1]))

    corruption = config.eval['corruption'] or default_corruption(test)
    shifted = corrupt_dataset(test, corruption, config.eval['severity'])
    ood_predictions = _predictions(checkpoint, shifted, config, 'ood')
    metrics['ood_auroc'] = auroc(_ood_scores(task, test_predictions),
                                 _ood_scores(task, ood_predictions))

    result = OrderedDict(label=checkpoint.metadata.get('label', ''),
                         metrics=metrics,
                         reliability=reliability,
                         corruption=OrderedDict(kind=corruption, severity=config.eval['severity']),
                         pac_bayes=pac_bayes_summary(checkpoint, train, train_predictions,
                                                     config.eval['delta']),
                         phi=checkpoint.family.summary(checkpoint.q_phi.mean) if checkpoint.q_phi.dim else {},
                         trajectory=trajectory(trace) if trace is not None else None)
    return result


def load_arm(out_dir, arm):
    """ Returns (checkpoint, trace) written by train_arm. """
    arm_dir = join(out_dir, arm)
    checkpoint = Checkpoint.load(join(arm_dir, 'checkpoint.json'))
    trace_path = join(arm_dir, 'trace.csv')
    trace = TrainTrace.load(trace_path) if exists(trace_path) else None
    return checkpoint, trace
