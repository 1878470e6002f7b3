import logging
from collections import OrderedDict
import numpy as np
from scipy.linalg import eigh

from ..distributions.noise import NoiseSource
from ..distributions.gaussian import DiagonalGaussian
from ..augmentation.families import default_family, sample_gamma
from ..models.network import NetworkSpec, ModelState
from ..elbo.estimators import sample_logliks, advantage_from_logliks
from ..elbo.objective import Minibatch, McConfig, augmented_elbo
from ..data.dataset import Dataset
from .checks import (TheoryReport, jensen_gap_check, jensen_gap_sweep,
                     invariance_expansion_check, information_gain)
from .conjugate import ConjugateGaussianModel, posterior_shrinkage, shrinkage_bound
from .calibration import ece_scaling_diagnostic


logger = logging.getLogger(__name__)


# ================================ CHECKS =====================================


def check_jensen_gap(seed=0):
    """ Linear equality case, a concave quadratic and random Lipschitz functions. """
    noise = NoiseSource(seed).child('jensen-gap')
    linear = jensen_gap_check(lambda g: g, 1., DiagonalGaussian([0.], [np.log(0.5)]),
                              10**6, noise=noise.child('linear'))
    linear_ratio = linear.quantities['gap'] / linear.quantities['bound']

    # |f'| <= 2|gamma| <= 12 sigma on every draw that occurs in practice
    sigma = 0.3
    quadratic = jensen_gap_check(lambda g: -g**2, 12 * sigma,
                                 DiagonalGaussian([0.], [np.log(sigma)]), 10**5,
                                 noise=noise.child('quadratic'))

    passed_random = 0
    n_random = 100
    for k in range(n_random):
        a, b, c = noise.child('coefficients', k).uniform(-2., 2., size=3)
        s = noise.child('scale', k).uniform(0.05, 1.)
        f = lambda g, a=a, b=b, c=c: a * np.sin(b * g) + c * g
        report = jensen_gap_check(f, abs(a * b) + abs(c), DiagonalGaussian([0.], [np.log(s)]),
                                  10**4, noise=noise.child('random-draws', k))
        passed_random += bool(report.passed)

    quantities = OrderedDict(linear_gap=linear.quantities['gap'],
                             linear_bound=linear.quantities['bound'],
                             linear_ratio=linear_ratio,
                             quadratic_gap=quadratic.quantities['gap'],
                             quadratic_bound=quadratic.quantities['bound'],
                             random_passed=passed_random,
                             random_total=n_random)
    passed = (linear.passed and abs(linear_ratio - 1) < 0.02 and quadratic.passed
              and quadratic.quantities['gap'] > 0 and passed_random == n_random)
    return TheoryReport('jensen-gap', quantities, target=linear.quantities['bound'],
                        tolerance=0.02, passed=passed)


def check_shrinkage(seed=0, k_values=(1, 2, 5, 10)):
    """ Replicated-observation posterior variance ratio against 1/K. """
    observations = NoiseSource(seed).child('shrinkage').standard_normal(10)
    table, passed = [], True
    for prior_var in (1e9, 1e2, 1.):
        model = ConjugateGaussianModel(0., prior_var, 1., observations)
        for k in k_values:
            var_true, var_naive, ratio = posterior_shrinkage(model, k)
            bound = shrinkage_bound(model, k)
            deviation = abs(ratio - 1. / k)
            passed &= deviation <= bound * (1 + 1e-9) + 1e-15
            if prior_var == 1e9:
                passed &= deviation < 1e-6
            table.append(OrderedDict(prior_var=prior_var, K=k, var_true=var_true,
                                     var_naive=var_naive, ratio=ratio, bound=bound))
    for row in table:
        if row['prior_var'] == 1e9:
            logger.info('shrinkage K=%d: ratio=%.9f (1/K=%.9f)', row['K'], row['ratio'], 1. / row['K'])
    return TheoryReport('shrinkage', OrderedDict(table=table), target='1/K',
                        tolerance=1e-6, passed=passed)


def check_invariance(seed=0, n_networks=10, scale=1e-4, n_samples=10**5):
    """ Second-order output-perturbation expansion on random small tanh networks. """
    noise = NoiseSource(seed).child('invariance')
    errors, passed = [], True
    for k in range(n_networks):
        spec = NetworkSpec([3, 8, 2], activations=['tanh'], bayes_last_layer=False)
        state = ModelState.initialize(spec, seed=seed * 1000 + k)
        state = state.replace({name: 3. * value for name, value in state.params.items()})
        x = noise.child('x', k).standard_normal(3)
        report = invariance_expansion_check(state, x, scale, n_samples, noise=noise.child('mc', k))
        errors.append(report.quantities['relative_error'])
        passed &= bool(report.passed)

    linear = NetworkSpec([3, 2], bayes_last_layer=False)
    state = ModelState.initialize(linear, seed=seed)
    report = invariance_expansion_check(state, np.ones(3), scale, n_samples,
                                        noise=noise.child('linear'))
    passed &= bool(report.passed) and report.quantities['second_order'] == 0
    quantities = OrderedDict(relative_errors=errors, max_relative_error=max(errors),
                             linear_relative_error=report.quantities['relative_error'])
    return TheoryReport('invariance', quantities, target=0., tolerance=0.05, passed=passed)


def check_information_gain(seed=0, n_pairs=100):
    """ Cholesky evaluation against generalized eigenvalues on random SPD pairs. """
    noise = NoiseSource(seed).child('information-gain')
    identity = information_gain(np.eye(2), np.eye(2))
    passed = abs(identity - np.log(2)) < 1e-12
    deviation = 0.
    for k in range(n_pairs):
        stream = noise.child(k)
        d = 1 + k % 6
        a = stream.child('a').standard_normal((d, d))
        b = stream.child('b').standard_normal((d, d))
        h_noaug = a @ a.T + 0.1 * np.eye(d)
        h_aug = b @ b.T + 0.1 * np.eye(d)
        gain = information_gain(h_noaug, h_aug)
        reference = 0.5 * np.sum(np.log1p(eigh(h_aug, h_noaug, eigvals_only=True)))
        deviation = max(deviation, abs(gain - reference))
        passed &= gain >= 0
    passed &= deviation < 1e-10
    quantities = OrderedDict(identity_gain=identity, max_deviation=deviation, n_pairs=n_pairs)
    return TheoryReport('information-gain', quantities, target=np.log(2),
                        tolerance=1e-10, passed=passed)


def check_dphi_nonneg(seed=0, n_triples=1000, n_samples=4):
    """ Marginalization advantage over shared samples: sign, equality case and batch identity. """
    noise = NoiseSource(seed).child('dphi')
    spec = NetworkSpec([1, 8, 1], activations=['tanh'], bayes_last_layer=False)
    family, _, _ = default_family('additive-shift', (1,))

    minimum = np.inf
    for t in range(n_triples):
        stream = noise.child('triple', t)
        state = ModelState.initialize(spec, seed=seed * 10**6 + t // 20)
        x, y = stream.child('xy').uniform(-3., 3., size=2)
        phi = [stream.child('mu').uniform(-0.5, 0.5), np.log(stream.child('sigma').uniform(0.01, 2.))]
        draw = family.with_phi(phi)
        samples = [sample_gamma(draw, stream.child('gamma', j)) for j in range(n_samples)]
        loglik = sample_logliks(np.array([x]), np.array([y]), state, None, draw, samples)
        minimum = min(minimum, advantage_from_logliks(loglik))

    # constant network output gives identical likelihoods
    zero = ModelState.initialize(spec, seed).replace(
        {name: np.zeros_like(v) for name, v in ModelState.initialize(spec, seed).params.items()})
    samples = [sample_gamma(family, noise.child('constant', j)) for j in range(n_samples)]
    constant = advantage_from_logliks(sample_logliks(
        np.array([0.3]), np.array([0.1]), zero, None, family, samples))

    # batch identity under shared samples
    inputs = noise.child('batch-x').uniform(-3., 3., size=(8, 1))
    targets = np.sin(2 * inputs[:, 0])
    data = Dataset(inputs, targets, 'regression')
    batch = Minibatch.from_dataset(data, np.arange(8), nominal_size=8)
    state = ModelState.initialize(spec, seed)
    q_phi = DiagonalGaussian(family.phi, -20.)
    mc = McConfig(s_gamma=n_samples, k_naive=n_samples)
    marginal = augmented_elbo(batch, state, q_phi, family, mc, noise.child('elbo'),
                              betas=(0., 0.), compute_gradient=False)
    naive = augmented_elbo(batch, state, q_phi, family, mc, noise.child('elbo'),
                           betas=(0., 0.), estimator='naive', compute_gradient=False)
    identity = abs(marginal.data_fit - naive.data_fit - batch.scale * batch.size * marginal.dphi_mean)

    quantities = OrderedDict(min_advantage=float(minimum), constant_advantage=float(constant),
                             batch_identity_error=float(identity), n_triples=n_triples)
    passed = minimum >= -1e-12 and constant == 0 and identity < 1e-10
    return TheoryReport('dphi-nonneg', quantities, target=0., tolerance=1e-12, passed=passed)


def diagnose_ece_scaling(seed=0):
    """ ECE against replication count K (not asserted). """
    curve, fit = ece_scaling_diagnostic(seeds=tuple(seed + s for s in range(5)))
    return TheoryReport('ece-scaling', OrderedDict(curve=curve, fit=fit), status='diagnostic')


def diagnose_jensen_sweep(seed=0):
    """ Jensen gap of sin(gamma) across augmentation scales (not asserted). """
    curve = jensen_gap_sweep(np.sin, 1., [0.05, 0.1, 0.2, 0.5, 1., 2.], 10**5,
                             noise=NoiseSource(seed).child('jensen-sweep'))
    return TheoryReport('jensen-sweep', OrderedDict(curve=curve), status='diagnostic')


# ================================= SUITE =====================================


CHECKS = OrderedDict([
    ('jensen-gap', check_jensen_gap),
    ('shrinkage', check_shrinkage),
    ('invariance', check_invariance),
    ('information-gain', check_information_gain),
    ('dphi-nonneg', check_dphi_nonneg)])

DIAGNOSTICS = OrderedDict([
    ('ece-scaling', diagnose_ece_scaling),
    ('jensen-sweep', diagnose_jensen_sweep)])


def available_checks():
    """ Returns {name: 'hard' or 'diagnostic'} for every check. """
    names = OrderedDict((name, 'hard') for name in CHECKS)
    names.update((name, 'diagnostic') for name in DIAGNOSTICS)
    return names


def run_suite(names=None, seed=0, diagnostics=True):
    """
    Runs theory checks.

    Args:

        names (list of str) - checks to run, defaults to every hard check

        seed (int) - seed of every check

        diagnostics (bool) - if True, diagnostics run as well

    Returns:

        reports (list of TheoryReport)

    """
    if names is None:
        names = list(CHECKS) + (list(DIAGNOSTICS) if diagnostics else [])
    unknown = [name for name in names if name not in CHECKS and name not in DIAGNOSTICS]
    if unknown:
        raise ValueError('Unknown checks: {:s}'.format(', '.join(unknown)))
    reports = []
    for name in names:
        check = CHECKS.get(name) or DIAGNOSTICS[name]
        report = check(seed=seed)
        logger.info('%s: %s', name, report.status)
        reports.append(report)
    return reports
