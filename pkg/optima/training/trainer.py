import logging
from collections import OrderedDict
from time import time
import numpy as np

from ..exceptions import TrainingError, NonFiniteError, DegenerateLikelihoodError
from ..distributions.noise import NoiseSource
from ..distributions.gaussian import DiagonalGaussian, LOG_STD_MIN, LOG_STD_MAX
from ..models.network import NetworkSpec, ModelState
from ..models.prediction import predict
from ..metrics.calibration import PredictionLog, basic_metrics
from ..elbo.objective import Minibatch, McConfig, ScoreBaseline, augmented_elbo
from ..elbo.estimators import ESTIMATORS
from .optimizer import OptimizerState, adam_step, clip_by_global_norm
from .trace import TrainTrace


logger = logging.getLogger(__name__)


class TrainConfig:
    """
    Optimization settings.

    Attributes:

        lr_net (float) - learning rate of network parameters

        lr_aug (float) - learning rate of q(phi); 0 freezes q(phi)

        beta_net (float) - weight of KL(q(theta) || p(theta))

        beta_aug (float) - weight of KL(q(phi) || p(phi))

        epochs (int) - number of passes over the data

        batch_size (int) - nominal minibatch size B

        mc (McConfig) - Monte Carlo sample counts

        clip_norm (float) - maximum global gradient norm

        seed (int) - seed of every random stream of the run

        log_every (int) - steps between trace records

        estimator (str) - 'marginalized', 'naive' or 'replicated'

        prior_std (float) - scale of the N(0, prior_std^2) prior over stochastic weights

        test_samples (int) - predictive draws for the optional test metric

        variance_schedule (callable) - optional (step, q_phi) -> q_phi hook applied after each update

    """

    def __init__(self,
                 lr_net=1e-4,
                 lr_aug=1e-2,
                 beta_net=0.1,
                 beta_aug=1.,
                 epochs=100,
                 batch_size=50,
                 mc=None,
                 clip_norm=1.,
                 seed=0,
                 log_every=10,
                 estimator='marginalized',
                 prior_std=1.,
                 test_samples=10,
                 variance_schedule=None):

        if not lr_net > 0:
            raise ValueError('lr_net must be positive.')
        if lr_aug < 0:
            raise ValueError('lr_aug must be non-negative.')
        if beta_net < 0 or beta_aug < 0:
            raise ValueError('KL weights must be non-negative.')
        if int(epochs) != epochs or epochs < 0:
            raise ValueError('epochs must be a non-negative integer.')
        if int(batch_size) != batch_size or batch_size < 1:
            raise ValueError('batch_size must be a positive integer.')
        if not clip_norm > 0:
            raise ValueError('clip_norm must be positive.')
        if int(log_every) != log_every or log_every < 1:
            raise ValueError('log_every must be a positive integer.')
        if estimator not in ESTIMATORS:
            raise ValueError('Unknown estimator "{}".'.format(estimator))
        if not prior_std > 0:
            raise ValueError('prior_std must be positive.')

        self.lr_net = float(lr_net)
        self.lr_aug = float(lr_aug)
        self.beta_net = float(beta_net)
        self.beta_aug = float(beta_aug)
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.mc = mc if mc is not None else McConfig()
        self.clip_norm = float(clip_norm)
        self.seed = int(seed)
        self.log_every = int(log_every)
        self.estimator = estimator
        self.prior_std = float(prior_std)
        self.test_samples = int(test_samples)
        self.variance_schedule = variance_schedule

    def to_dict(self):
        return dict(lr_net=self.lr_net, lr_aug=self.lr_aug,
                    beta_net=self.beta_net, beta_aug=self.beta_aug,
                    epochs=self.epochs, batch_size=self.batch_size,
                    mc=self.mc.to_dict(), clip_norm=self.clip_norm,
                    seed=self.seed, log_every=self.log_every,
                    estimator=self.estimator, prior_std=self.prior_std,
                    test_samples=self.test_samples)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if 'mc' in data:
            data['mc'] = McConfig.from_dict(data['mc'])
        return cls(**data)


def minibatch_iterator(dataset, batch_size, seed, epoch):
    """
    Partitions an epoch-seeded permutation into minibatches.

    Args:

        dataset (Dataset or int) - dataset, or its size

        batch_size (int)

        seed (int)

        epoch (int)

    Returns:

        batches (list of np.ndarray[int]) - index batches; the last may be short

    """
    n = dataset if isinstance(dataset, (int, np.integer)) else dataset.size
    if n < 1:
        raise ValueError('Dataset is empty.')
    if batch_size < 1:
        raise ValueError('batch_size must be at least 1.')
    order = NoiseSource(seed).child('batches', epoch).permutation(n)
    return [order[i:i+batch_size] for i in range(0, n, batch_size)]


# ============================ PARAMETER PACKING ==============================


def _pack(state, q_phi, learn_phi):
    params = OrderedDict(state.params)
    if learn_phi:
        params['aug.mean'] = q_phi.mean
        params['aug.log_std'] = q_phi.log_std
    return params


def _unpack(state, q_phi, params, learn_phi):
    clamped = OrderedDict()
    for name, value in params.items():
        if name.endswith('log_std'):
            value = np.clip(value, LOG_STD_MIN, LOG_STD_MAX)
        clamped[name] = value
    network = OrderedDict((k, v) for k, v in clamped.items() if not k.startswith('aug.'))
    state = state.replace(network)
    if learn_phi:
        q_phi = DiagonalGaussian(clamped['aug.mean'], clamped['aug.log_std'])
    return state, q_phi


def _learning_rates(params, config):
    return {name: config.lr_aug if name.startswith('aug.') else config.lr_net for name in params}


def _test_metric(state, test, config):
    """ Returns basic metrics of Monte Carlo predictions on <test>. """
    probs_or_mean = predict(state, test.inputs, n_samples=config.test_samples,
                            noise=NoiseSource(config.seed).child('test'))
    if state.spec.head == 'categorical':
        log = PredictionLog.classification(probs_or_mean, test.targets)
    else:
        log = PredictionLog.regression(*probs_or_mean, test.targets)
    return basic_metrics(log)


# ================================ TRAINING ===================================


def run_training(dataset, state, q_phi, family, config, include_kl_theta=True, test=None):
    """
    Stochastic optimization of the augmented ELBO.

    Args:

        dataset (Dataset) - training data

        state (ModelState) - initial network

        q_phi (DiagonalGaussian) - initial q(phi)

        family (AugmentationFamily) - template; family.phi_prior is p(phi)

        config (TrainConfig)

        include_kl_theta (bool) - if False, KL(q(theta) || p(theta)) is left out of the objective

        test (Dataset) - optional data for the test metric

    Returns:

        state (ModelState)

        q_phi (DiagonalGaussian)

        trace (TrainTrace)

    """
    start = time()
    noise = NoiseSource(config.seed)
    learn_phi = q_phi.dim > 0 and config.lr_aug > 0
    prior_theta = DiagonalGaussian.standard(state.theta_dim, config.prior_std)
    betas = (config.beta_net if include_kl_theta else 0., config.beta_aug)
    metric = None
    if test is not None:
        metric = 'accuracy' if state.spec.head == 'categorical' else 'mse'
    trace = TrainTrace(family, test_metric=metric)
    baseline = ScoreBaseline()

    params = _pack(state, q_phi, learn_phi)
    lr = _learning_rates(params, config)
    optimizer = OptimizerState.zeros_like(params)

    step = 0
    for epoch in range(config.epochs):
        batches = minibatch_iterator(dataset, config.batch_size, config.seed, epoch)
        for number, indices in enumerate(batches):
            batch = Minibatch.from_dataset(dataset, indices,
                                           nominal_size=config.batch_size,
                                           epoch=epoch, number=number)
            try:
                estimate = augmented_elbo(batch, state, q_phi, family, config.mc,
                                          noise.child('elbo'),
                                          betas=betas,
                                          estimator=config.estimator,
                                          prior_theta=prior_theta,
                                          baseline=baseline)
            except (NonFiniteError, DegenerateLikelihoodError) as error:
                raise TrainingError('Objective is not finite: {}'.format(error),
                                    step=step, batch=number, trace=trace) from error

            grads = OrderedDict((name, -estimate.gradients[name]) for name in params)
            grads, norm = clip_by_global_norm(grads, config.clip_norm)
            try:
                optimizer, params = adam_step(optimizer, params, grads, lr)
            except NonFiniteError as error:
                raise TrainingError('Non-finite gradient for {}'.format(error.block),
                                    step=step, batch=number,
                                    components=estimate.components(),
                                    trace=trace) from error

            state, q_phi = _unpack(state, q_phi, params, learn_phi)
            if learn_phi and config.variance_schedule is not None:
                q_phi = config.variance_schedule(step, q_phi).clamped()
                params = _pack(state, q_phi, learn_phi)
            step += 1

            if step % config.log_every == 0:
                test_value = None
                if test is not None:
                    test_value = _test_metric(state, test, config)[metric]
                train_loss = -estimate.data_fit / dataset.size
                trace.log(step, epoch, estimate, norm, family, q_phi, train_loss, test_value)
                logger.info('step %d (epoch %d): elbo=%.6g, kl_phi=%.4g, dphi=%.3g',
                            step, epoch, estimate.total, estimate.kl_phi, estimate.dphi_mean)
            else:
                logger.debug('step %d: elbo=%.6g', step, estimate.total)

    logger.info('Training completed: %d steps in %.1f s.', step, time() - start)
    return state, q_phi, trace


def train_full_vi(dataset, spec, family, q_phi, config, state=None, test=None):
    """
    Jointly learns q(theta) over the stochastic layers and q(phi).

    Args:

        dataset (Dataset)

        spec (NetworkSpec) - must have a stochastic layer

        family (AugmentationFamily) - template; family.phi_prior is p(phi)

        q_phi (DiagonalGaussian) - initial q(phi)

        config (TrainConfig)

        state (ModelState) - initial network, defaults to ModelState.initialize(spec, config.seed)

        test (Dataset) - optional data for the test metric

    Returns:

        state (ModelState) - includes q(theta)

        q_phi (DiagonalGaussian)

        trace (TrainTrace)

    """
    if not spec.is_bayesian:
        raise ValueError('Full variational inference needs a stochastic layer.')
    state = ModelState.initialize(spec, config.seed) if state is None else state
    return run_training(dataset, state, q_phi, family, config, test=test)


def train_partial_vi(dataset, spec, family, q_phi, config, state=None, test=None):
    """
    Learns a point estimate of every network weight together with q(phi). Stochastic-layer flags of <spec> are ignored.

    Returns:

        state (ModelState) - point network

        q_phi (DiagonalGaussian)

        trace (TrainTrace)

    """
    data = spec.to_dict()
    data.update(bayes_last_layer=False, bayes_all_layers=False)
    point_spec = NetworkSpec.from_dict(data)
    state = ModelState.initialize(point_spec, config.seed) if state is None else state
    return run_training(dataset, state, q_phi, family, config,
                        include_kl_theta=False, test=test)
