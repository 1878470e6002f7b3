"""
Monte Carlo estimate of the augmented evidence lower bound and its gradient.

The data-fit term is evaluated on one computation graph holding the network, the likelihood and the reduction over transformation samples. The graph's gradient with respect to the transformed inputs is pulled back through each family's transform to phi, and from phi to q(phi) through the reparameterization phi = mean + exp(log_std) * eps. mixup-beta has no pathwise form; its gradient uses the score function of Beta(alpha, alpha) with a moving-average baseline.
"""

from collections import OrderedDict
import numpy as np

from ..exceptions import DegenerateLikelihoodError, NonFiniteError
from ..gradengine.graph import ComputationGraph, forward, backward
from ..distributions.gaussian import (
    DiagonalGaussian, kl_diagonal_gaussians, kl_gradient)
from ..augmentation.families import sample_gamma_batch, apply_transform, pullback
from ..models.network import build_network, network_bindings, flatten_inputs
from ..models.likelihood import build_log_likelihood, one_hot
from .estimators import ESTIMATORS, combine, advantage_from_logliks


class Minibatch:
    """
    A minibatch of training examples.

    Attributes:

        indices (np.ndarray[int]) - dataset indices

        inputs (np.ndarray[float]) - B inputs

        targets (np.ndarray) - B targets

        n_total (int) - dataset size N

        nominal_size (int) - configured batch size used in the N/B scaling

        epoch (int) - epoch number

        number (int) - batch number within the epoch

    """

    def __init__(self, indices, inputs, targets, n_total,
                 nominal_size=None,
                 epoch=0,
                 number=0):
        self.indices = np.asarray(indices, dtype=int)
        self.inputs = np.asarray(inputs, dtype=np.float64)
        self.targets = np.asarray(targets)
        if self.indices.size < 1:
            raise ValueError('Minibatch is empty.')
        if not len(self.inputs) == len(self.targets) == self.indices.size:
            raise ValueError('Minibatch indices, inputs and targets differ in length.')
        self.n_total = int(n_total)
        self.nominal_size = int(nominal_size or self.indices.size)
        self.epoch = int(epoch)
        self.number = int(number)

    @property
    def size(self):
        return self.indices.size

    @property
    def scale(self):
        """ Likelihood rescaling N / B. """
        return self.n_total / self.nominal_size

    @classmethod
    def from_dataset(cls, dataset, indices, nominal_size=None, epoch=0, number=0):
        indices = np.asarray(indices, dtype=int)
        return cls(indices, dataset.inputs[indices], dataset.targets[indices], dataset.size,
                   nominal_size=nominal_size, epoch=epoch, number=number)


class McConfig:
    """
    Monte Carlo sample counts.

    Attributes:

        s_gamma (int) - transformation samples per example (marginalized estimator)

        k_naive (int) - replicated copies per example (naive and replicated estimators)

        s_theta (int) - theta draws per step

        s_phi (int) - phi draws per step

    """

    def __init__(self, s_gamma=4, k_naive=5, s_theta=1, s_phi=1):
        for name, value in (('s_gamma', s_gamma), ('k_naive', k_naive),
                            ('s_theta', s_theta), ('s_phi', s_phi)):
            if int(value) != value or value < 1:
                raise ValueError('{:s} must be a positive integer.'.format(name))
        self.s_gamma = int(s_gamma)
        self.k_naive = int(k_naive)
        self.s_theta = int(s_theta)
        self.s_phi = int(s_phi)

    def samples(self, estimator):
        """ Returns the number of transformation samples per example. """
        return self.s_gamma if estimator == 'marginalized' else self.k_naive

    def to_dict(self):
        return dict(s_gamma=self.s_gamma, k_naive=self.k_naive,
                    s_theta=self.s_theta, s_phi=self.s_phi)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


class ElboEstimate:
    """
    Components of one augmented ELBO estimate.

    Attributes:

        data_fit (float) - scaled expected log-likelihood term

        kl_theta (float) - KL(q(theta) || p(theta))

        kl_phi (float) - KL(q(phi) || p(phi))

        beta_net (float) - weight of kl_theta

        beta_aug (float) - weight of kl_phi

        total (float) - data_fit - beta_net * kl_theta - beta_aug * kl_phi

        dphi_mean (float) - batch mean of the marginalization advantage

        gradients (OrderedDict) - d total / d parameter, keyed by parameter name ('aug.mean' and 'aug.log_std' for q(phi))

    """

    def __init__(self, data_fit, kl_theta, kl_phi, beta_net, beta_aug,
                 dphi_mean=0.,
                 gradients=None):
        if kl_theta < 0 or kl_phi < 0:
            raise ValueError('KL terms must be non-negative.')
        if beta_net < 0 or beta_aug < 0:
            raise ValueError('KL weights must be non-negative.')
        self.data_fit = float(data_fit)
        self.kl_theta = float(kl_theta)
        self.kl_phi = float(kl_phi)
        self.beta_net = float(beta_net)
        self.beta_aug = float(beta_aug)
        self.total = self.data_fit - self.beta_net * self.kl_theta - self.beta_aug * self.kl_phi
        self.dphi_mean = float(dphi_mean)
        self.gradients = gradients if gradients is not None else OrderedDict()

    def __repr__(self):
        return 'ElboEstimate(total={:.6g}, data_fit={:.6g}, kl_theta={:.6g}, kl_phi={:.6g})'.format(
            self.total, self.data_fit, self.kl_theta, self.kl_phi)

    def components(self):
        """ Returns scalar components as a dict. """
        return OrderedDict(total=self.total,
                           data_fit=self.data_fit,
                           kl_theta=self.kl_theta,
                           kl_phi=self.kl_phi,
                           dphi_mean=self.dphi_mean)


class ScoreBaseline:
    """ Exponential moving average of per-example data fit, used by the score-function gradient. """

    def __init__(self, decay=0.9):
        self.decay = decay
        self.value = None

    def update(self, x):
        self.value = x if self.value is None else self.decay * self.value + (1 - self.decay) * x


# ============================== GRAPH ========================================


def data_fit_graph(spec, batch_size, n_samples, scale, estimator, mixed=False):
    """
    Builds the data-fit graph.

    Args:

        spec (NetworkSpec)

        batch_size (int) - B

        n_samples (int) - transformation samples per example

        scale (float) - likelihood rescaling N / B

        estimator (str) - reduction over samples

        mixed (bool) - targets are mixup pairs

    Returns:

        graph (ComputationGraph) - output is the scaled data fit

        loglik (int) - node of (B, n_samples) per-sample log-likelihoods

    """
    if estimator not in ESTIMATORS:
        raise ValueError('Unknown estimator "{}".'.format(estimator))
    graph = ComputationGraph()
    x = graph.leaf('x', (batch_size, n_samples, spec.layer_sizes[0]))
    output = build_network(graph, spec, x)
    loglik = build_log_likelihood(graph, spec, output, mixed=mixed)
    if estimator == 'marginalized':
        log_s = graph.constant(np.full((batch_size,), np.log(n_samples)), name='log_s')
        per_example = graph.subtract(graph.logsumexp(loglik, axis=1), log_s)
    elif estimator == 'naive':
        per_example = graph.mean(loglik, axis=1)
    else:
        per_example = graph.sum(loglik, axis=1)
    graph.set_output(graph.scale(graph.sum(per_example), scale))
    return graph, loglik


def mixup_partners(indices, noise):
    """
    Pairs every example of a batch with a mixup partner from the same batch.

    The pairing is a permutation keyed by <noise> over the sorted dataset indices, so it is reproducible and does not depend on the order of the batch.

    Args:

        indices (np.ndarray[int]) - dataset indices of the batch

        noise (NoiseSource) - stream the permutation is drawn from

    Returns:

        partners (np.ndarray[int]) - batch position of each example's partner

    """
    order = np.argsort(indices, kind='stable')
    partners = np.empty(order.size, dtype=int)
    partners[order] = order[noise.permutation(order.size)]
    return partners


def _transform_batch(family, batch, n_samples, noise, partners=None):
    """ Draws gamma and transforms every example <n_samples> times. """
    size = batch.size
    if partners is None:
        partners = np.arange(size)
    samples, transformed = [], []
    for pos, idx in enumerate(batch.indices):
        partner = batch.inputs[partners[pos]]
        row = sample_gamma_batch(family, noise.child(int(idx)), n_samples)
        transformed += [apply_transform(family, sample, batch.inputs[pos], partner=partner)
                        for sample in row]
        samples.append(row)
    transformed = np.stack(transformed).reshape((size, n_samples) + family.input_shape)
    return samples, transformed


def _target_bindings(spec, batch, samples, n_samples, mixed, partners=None):
    """ Returns likelihood bindings for transformed examples. """
    size = batch.size
    if partners is None:
        partners = np.arange(size)
    if spec.head == 'categorical':
        targets = one_hot(batch.targets, spec.n_classes)
        y = np.repeat(targets[:, None, :], n_samples, axis=1)
        if mixed:
            lam = np.array([[s.gamma[0] for s in row] for row in samples])[..., None]
            y = lam * y + (1 - lam) * y[partners]
        return dict(y=y)
    targets = batch.targets.reshape(size, -1).astype(np.float64)
    y = np.repeat(targets[:, None, :], n_samples, axis=1)
    if not mixed:
        return dict(y=y)
    lam = np.array([[s.gamma[0] for s in row] for row in samples])
    return dict(y=y, y_partner=y[partners], mix=lam, mix_partner=1 - lam)


def _check_values(graph, values, loglik, batch):
    """ Raises on degenerate examples or any non-finite node value. """
    per_sample = values[loglik]
    degenerate = ~np.any(np.isfinite(per_sample), axis=1)
    if np.any(degenerate):
        pos = int(np.argmax(degenerate))
        raise DegenerateLikelihoodError(
            'Every likelihood sample of example {:d} is zero.'.format(int(batch.indices[pos])),
            index=pos)
    for i, value in enumerate(values):
        if not np.all(np.isfinite(value)):
            raise NonFiniteError('Non-finite value at node {:d} ({:s}).'.format(
                i, graph.nodes[i].kind), node=i)


# ============================== OBJECTIVE ====================================


def augmented_elbo(batch, state, q_phi, family, mc, noise,
                   betas=(0.1, 1.),
                   estimator='marginalized',
                   prior_theta=None,
                   compute_gradient=True,
                   baseline=None):
    """
    Estimates the augmented ELBO on a minibatch.

    Args:

        batch (Minibatch)

        state (ModelState) - network; stochastic layers define q(theta)

        q_phi (DiagonalGaussian) - variational distribution over phi

        family (AugmentationFamily) - template; its phi_prior is p(phi)

        mc (McConfig)

        noise (NoiseSource) - root stream of the run

        betas (tuple) - (beta_net, beta_aug) KL weights

        estimator (str) - 'marginalized', 'naive' or 'replicated'

        prior_theta (DiagonalGaussian) - p(theta), defaults to N(0, I)

        compute_gradient (bool) - if False, gradients are left empty

        baseline (ScoreBaseline) - moving-average baseline for mixup-beta, updated in place

    Returns:

        estimate (ElboEstimate)

    """
    spec = state.spec
    beta_net, beta_aug = betas
    n_samples = mc.samples(estimator)
    if family.kind == 'none' and estimator != 'replicated':
        # identical copies leave the log-mean-exp and the mean unchanged
        n_samples = 1
    mixed = family.kind == 'mixup-beta'
    graph, loglik = data_fit_graph(
        spec, batch.size, n_samples, batch.scale, estimator, mixed=mixed)
    learn_phi = q_phi.dim > 0

    gradients = OrderedDict((name, np.zeros(v.shape)) for name, v in state.params.items())
    if learn_phi:
        gradients['aug.mean'] = np.zeros(q_phi.dim)
        gradients['aug.log_std'] = np.zeros(q_phi.dim)

    draws = mc.s_theta * mc.s_phi
    data_fit, dphi_mean, fits = 0., 0., []
    for a in range(mc.s_theta):
        theta_noise = None
        if state.theta_dim:
            theta_noise = noise.child('theta', batch.epoch, batch.number, a).standard_normal(
                state.theta_dim)
        bindings = network_bindings(state, theta_noise)

        for c in range(mc.s_phi):
            eps_phi = np.zeros(0)
            draw = family
            if learn_phi:
                eps_phi = noise.child('phi', batch.epoch, batch.number, c).standard_normal(q_phi.dim)
                draw = family.with_phi(q_phi.mean + q_phi.std * eps_phi)

            gamma_noise = noise.child('gamma', batch.epoch, c)
            partners = None
            if mixed:
                partners = mixup_partners(
                    batch.indices, noise.child('mixup', batch.epoch, batch.number, c))
            samples, transformed = _transform_batch(
                draw, batch, n_samples, gamma_noise, partners=partners)
            bindings['x'] = flatten_inputs(spec, transformed)
            bindings.update(_target_bindings(spec, batch, samples, n_samples, mixed, partners=partners))

            values = forward(graph, bindings, check_finite=False)
            _check_values(graph, values, loglik, batch)
            data_fit += float(values[graph.output]) / draws
            dphi_mean += float(np.mean(advantage_from_logliks(values[loglik]))) / draws

            if not compute_gradient:
                continue
            grads = backward(graph, values, list(state.params) + ['x'])
            for name in state.params:
                gradients[name] += grads[name] / draws
            if not learn_phi:
                continue

            if draw.pathwise:
                grad_x = grads['x'].reshape(transformed.shape)
                grad_phi = np.zeros(q_phi.dim)
                for pos, row in enumerate(samples):
                    for j, sample in enumerate(row):
                        grad_phi += pullback(draw, sample, batch.inputs[pos], grad_x[pos, j])
            else:
                per_example = combine(values[loglik], estimator)
                fits.append(float(np.mean(per_example)))
                reference = baseline.value if baseline is not None and baseline.value is not None else 0.
                scores = np.array([sum(s.score for s in row) for row in samples])
                grad_phi = np.array([batch.scale * np.sum((per_example - reference) * scores)])

            gradients['aug.mean'] += grad_phi / draws
            gradients['aug.log_std'] += grad_phi * q_phi.std * eps_phi / draws

    if baseline is not None:
        for fit in fits:
            baseline.update(fit)

    kl_theta = 0.
    if state.theta_dim:
        q_theta = state.q_theta()
        if prior_theta is None:
            prior_theta = DiagonalGaussian.standard(state.theta_dim)
        kl_theta = kl_diagonal_gaussians(q_theta, prior_theta)
        if compute_gradient:
            dmean, dlog_std = kl_gradient(q_theta, prior_theta)
            for name, g in state.theta_gradient(dmean, dlog_std).items():
                gradients[name] -= beta_net * g

    kl_phi = 0.
    if learn_phi:
        kl_phi = kl_diagonal_gaussians(q_phi, family.phi_prior)
        if compute_gradient:
            dmean, dlog_std = kl_gradient(q_phi, family.phi_prior)
            gradients['aug.mean'] -= beta_aug * dmean
            gradients['aug.log_std'] -= beta_aug * dlog_std

    return ElboEstimate(data_fit, kl_theta, kl_phi, beta_net, beta_aug,
                        dphi_mean=dphi_mean,
                        gradients=gradients if compute_gradient else OrderedDict())
