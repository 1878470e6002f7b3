import warnings
import numpy as np
import pytest

from optima.exceptions import DegenerateLikelihoodError
from optima.distributions.noise import NoiseSource
from optima.distributions.gaussian import DiagonalGaussian
from optima.gradengine.finite import finite_difference_gradient, relative_error
from optima.augmentation.families import default_family, sample_gamma
from optima.models.network import NetworkSpec, ModelState, forward
from optima.models.likelihood import log_likelihood
from optima.elbo.estimators import (log_mean_exp, combine, advantage_from_logliks,
                                    marginalized_loglik, naive_loglik,
                                    marginalization_advantage)
from optima.elbo.objective import (Minibatch, McConfig, ElboEstimate, ScoreBaseline, augmented_elbo,
                                   mixup_partners)
from optima.elbo.bounds import pac_bayes_bound, complexity_term, bounded_risk


LOG_PAIR = np.log([0.9, 0.1])


def _regression_batch(n=6, n_total=30, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, size=(n, 1))
    y = np.sin(2 * x) + 0.1 * rng.normal(size=(n, 1))
    return Minibatch(np.arange(n), x, y, n_total)


def _regression_setup(kind='additive-shift', seed=0):
    spec = NetworkSpec([1, 4, 1], noise_std=0.3)
    state = ModelState.initialize(spec, seed=seed)
    state = state.replace({k: np.full(v.shape, -1.5) for k, v in state.params.items()
                           if k.endswith('.log_std')})
    family, q_phi, _ = default_family(kind, (1,), sigma_init=0.3, q_log_std=np.log(0.2))
    return state, family, q_phi


class TestEstimators:

    def test_log_mean_exp_constant(self):
        assert log_mean_exp([-2.5, -2.5, -2.5]) == -2.5

    def test_log_mean_exp_pair(self):
        np.testing.assert_allclose(log_mean_exp(LOG_PAIR), -0.693147, atol=1e-6)

    def test_log_mean_exp_stable(self):
        np.testing.assert_allclose(log_mean_exp([-1000., -1000.]), -1000., rtol=1e-15)

    def test_log_mean_exp_full_reduction_is_scalar(self):
        """ Reducing a 2-D array over all axes returns a plain float without deprecation warnings. """
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            value = log_mean_exp(np.full((2, 3), -1.5))
        assert type(value) is float
        assert value == -1.5

    def test_log_mean_exp_degenerate(self):
        with pytest.raises(DegenerateLikelihoodError):
            log_mean_exp([-np.inf, -np.inf])

    def test_naive_pair(self):
        np.testing.assert_allclose(combine(LOG_PAIR, 'naive'), -1.203973, atol=1e-6)

    def test_replicated_pair(self):
        np.testing.assert_allclose(combine(LOG_PAIR, 'replicated'), np.sum(LOG_PAIR), rtol=1e-15)

    def test_unknown_estimator(self):
        with pytest.raises(ValueError):
            combine(LOG_PAIR, 'importance')

    def test_advantage_pair(self):
        np.testing.assert_allclose(advantage_from_logliks(LOG_PAIR), 0.510826, atol=1e-6)

    def test_advantage_constant(self):
        assert advantage_from_logliks([-0.7, -0.7, -0.7, -0.7]) == 0.

    def test_advantage_non_negative(self):
        rng = np.random.default_rng(0)
        values = rng.normal(scale=5., size=(1000, 7))
        assert np.min(advantage_from_logliks(values)) >= -1e-12

    def test_network_estimators(self):
        """ Estimators over a real network agree with their definitions on shared samples. """
        state, family, _ = _regression_setup()
        x, y = np.array([0.3]), np.array([0.1])
        samples = [sample_gamma(family, NoiseSource(0).child(j)) for j in range(5)]
        theta_noise = NoiseSource(1).standard_normal(state.theta_dim)
        logliks = np.array([log_likelihood('gaussian', forward(state, theta_noise, x + s.gamma),
                                           y, state.spec.noise_std) for s in samples])
        marginal = marginalized_loglik(x, y, state, theta_noise, family, samples)
        naive = naive_loglik(x, y, state, theta_noise, family, samples)
        np.testing.assert_allclose(marginal, log_mean_exp(logliks), rtol=1e-12)
        np.testing.assert_allclose(naive, np.mean(logliks), rtol=1e-12)
        np.testing.assert_allclose(marginalization_advantage(x, y, state, theta_noise, family, samples),
                                   marginal - naive, atol=1e-12)
        assert marginal - naive >= -1e-12

    def test_single_sample(self):
        """ With one sample the marginalized and naive estimators coincide. """
        state, family, _ = _regression_setup()
        sample = [sample_gamma(family, NoiseSource(2))]
        theta_noise = NoiseSource(3).standard_normal(state.theta_dim)
        x, y = np.array([-0.4]), np.array([0.2])
        np.testing.assert_allclose(marginalized_loglik(x, y, state, theta_noise, family, sample),
                                   naive_loglik(x, y, state, theta_noise, family, sample),
                                   rtol=1e-14)


class TestConfiguration:

    def test_empty_minibatch(self):
        with pytest.raises(ValueError):
            Minibatch([], np.zeros((0, 1)), np.zeros((0, 1)), 10)

    def test_minibatch_scale(self):
        batch = Minibatch([0, 1], np.zeros((2, 1)), np.zeros((2, 1)), 10, nominal_size=4)
        assert batch.scale == 2.5

    def test_invalid_mc(self):
        with pytest.raises(ValueError):
            McConfig(s_gamma=0)
        with pytest.raises(ValueError):
            McConfig(k_naive=1.5)

    def test_estimate_total(self):
        estimate = ElboEstimate(-10., 2., 1., 0.1, 1.)
        assert estimate.total == -10. - 0.2 - 1.
        with pytest.raises(ValueError):
            ElboEstimate(0., -1., 0., 0.1, 1.)


class TestAugmentedElbo:

    def test_collapses_to_scaled_likelihood(self):
        """ Zero KL weights and collapsed distributions reduce the objective to the scaled log-likelihood. """
        spec = NetworkSpec([1, 5, 1], noise_std=0.3)
        state = ModelState.initialize(spec, seed=1)
        state = state.replace({k: np.full(v.shape, -20.) for k, v in state.params.items()
                               if k.endswith('.log_std')})
        family, _, prior = default_family('additive-shift', (1,))
        family = family.with_phi([0., -20.])
        q_phi = DiagonalGaussian([0., -20.], -20.)
        batch = _regression_batch()
        estimate = augmented_elbo(batch, state, q_phi, family, McConfig(s_gamma=1), NoiseSource(0),
                                  betas=(0., 0.))
        outputs = forward(state, np.zeros(state.theta_dim), batch.inputs)
        expected = batch.scale * sum(log_likelihood('gaussian', o, t, spec.noise_std)
                                     for o, t in zip(outputs, batch.targets))
        np.testing.assert_allclose(estimate.total, expected, atol=1e-6)

    def test_kl_vanishes_at_prior(self):
        spec = NetworkSpec([1, 3, 1])
        state = ModelState.initialize(spec)
        state = state.replace({k: np.zeros(v.shape) for k, v in state.params.items()
                               if k.startswith('layer1.')})
        family, _, prior = default_family('additive-shift', (1,))
        estimate = augmented_elbo(_regression_batch(), state, prior, family, McConfig(),
                                  NoiseSource(0), compute_gradient=False)
        assert estimate.kl_theta == 0.
        assert estimate.kl_phi == 0.

    def test_marginalization_advantage_identity(self):
        """ Marginalized minus naive data fit equals the scaled batch sum of advantages. """
        state, family, q_phi = _regression_setup()
        batch = _regression_batch()
        mc = McConfig(s_gamma=4, k_naive=4)
        marginal = augmented_elbo(batch, state, q_phi, family, mc, NoiseSource(5),
                                  compute_gradient=False)
        naive = augmented_elbo(batch, state, q_phi, family, mc, NoiseSource(5),
                               estimator='naive', compute_gradient=False)
        difference = marginal.data_fit - naive.data_fit
        assert difference >= -1e-12
        assert abs(difference - batch.scale * batch.size * marginal.dphi_mean) < 1e-10

    def test_batch_reordering(self):
        """ The estimate does not depend on the order of examples in the batch. """
        state, family, q_phi = _regression_setup()
        batch = _regression_batch()
        order = np.array([3, 0, 5, 1, 4, 2])
        shuffled = Minibatch(batch.indices[order], batch.inputs[order], batch.targets[order],
                             batch.n_total)
        a = augmented_elbo(batch, state, q_phi, family, McConfig(), NoiseSource(7),
                           compute_gradient=False)
        b = augmented_elbo(shuffled, state, q_phi, family, McConfig(), NoiseSource(7),
                           compute_gradient=False)
        assert abs(a.total - b.total) < 1e-10

    def test_more_gamma_samples_never_hurt(self):
        """ The mean marginalized data fit over 200 trials is nondecreasing in s_gamma. """
        state, family, q_phi = _regression_setup()
        family = family.with_phi([0., np.log(0.5)])
        batch = _regression_batch(n=2)
        means, errors = [], []
        for s in (1, 4, 16):
            fits = [augmented_elbo(batch, state, DiagonalGaussian([], []), family,
                                   McConfig(s_gamma=s), NoiseSource(trial),
                                   compute_gradient=False).data_fit
                    for trial in range(200)]
            means.append(np.mean(fits))
            errors.append(np.std(fits) / np.sqrt(len(fits)))
        for k in range(2):
            assert means[k+1] >= means[k] - 2 * np.hypot(errors[k], errors[k+1])

    @pytest.mark.parametrize('kind', ['additive-shift', 'categorical-choice'])
    def test_gradient_matches_finite_differences(self, kind):
        """ Every variational parameter gradient matches finite differences under common random numbers. """
        state, family, q_phi = _regression_setup(kind=kind)
        batch = _regression_batch(n=4)
        mc = McConfig(s_gamma=3)

        def total(state, q_phi):
            return augmented_elbo(batch, state, q_phi, family, mc, NoiseSource(11),
                                  compute_gradient=False).total

        estimate = augmented_elbo(batch, state, q_phi, family, mc, NoiseSource(11))
        for name, value in state.params.items():
            f = lambda v: total(state.replace({name: v.reshape(value.shape)}), q_phi)
            numeric = finite_difference_gradient(f, value.ravel().copy(), step=1e-6)
            assert relative_error(estimate.gradients[name].ravel(), numeric, floor=1e-3) < 1e-3
        for name, attribute in (('aug.mean', 'mean'), ('aug.log_std', 'log_std')):
            def f(v):
                params = dict(mean=q_phi.mean, log_std=q_phi.log_std)
                params[attribute] = v
                return total(state, DiagonalGaussian(params['mean'], params['log_std']))
            numeric = finite_difference_gradient(f, getattr(q_phi, attribute).copy(), step=1e-6)
            assert relative_error(estimate.gradients[name], numeric, floor=1e-3) < 1e-3

    def test_fixed_augmentation_has_no_phi_gradient(self):
        state, family, _ = _regression_setup()
        estimate = augmented_elbo(_regression_batch(), state, DiagonalGaussian([], []), family,
                                  McConfig(), NoiseSource(0))
        assert 'aug.mean' not in estimate.gradients
        assert estimate.kl_phi == 0.

    def test_mixup_score_gradient(self):
        """ mixup-beta yields a finite score-function gradient and advances the baseline. """
        spec = NetworkSpec([2, 4, 3], head='categorical')
        state = ModelState.initialize(spec, seed=2)
        family, q_phi, _ = default_family('mixup-beta', (2,))
        rng = np.random.default_rng(3)
        batch = Minibatch(np.arange(5), rng.normal(size=(5, 2)), rng.integers(0, 3, size=5), 20)
        baseline = ScoreBaseline()
        estimate = augmented_elbo(batch, state, q_phi, family, McConfig(), NoiseSource(0),
                                  baseline=baseline)
        assert np.all(np.isfinite(estimate.gradients['aug.mean']))
        assert np.all(np.isfinite(estimate.gradients['aug.log_std']))
        assert baseline.value is not None

    def test_mixup_partners(self):
        """ Pairs are a permutation of the batch and follow the dataset indices, not positions. """
        indices = np.array([12, 3, 7, 40, 9])
        order = np.array([2, 4, 0, 3, 1])
        a = mixup_partners(indices, NoiseSource(4).child('mixup'))
        b = mixup_partners(indices[order], NoiseSource(4).child('mixup'))
        assert sorted(a.tolist()) == list(range(5))
        pairs_a = {indices[k]: indices[a[k]] for k in range(5)}
        pairs_b = {indices[order][k]: indices[order][b[k]] for k in range(5)}
        assert pairs_a == pairs_b

    @pytest.mark.parametrize('head', ['categorical', 'gaussian'])
    def test_mixup_batch_reordering(self, head):
        """ The mixup estimate does not depend on the order of examples in the batch. """
        n_out = 3 if head == 'categorical' else 1
        state = ModelState.initialize(NetworkSpec([2, 4, n_out], head=head), seed=2)
        family, q_phi, _ = default_family('mixup-beta', (2,))
        rng = np.random.default_rng(3)
        targets = rng.integers(0, 3, size=6) if head == 'categorical' else rng.normal(size=(6, 1))
        batch = Minibatch(np.arange(10, 16), rng.normal(size=(6, 2)), targets, 24)
        order = np.array([3, 0, 5, 1, 4, 2])
        shuffled = Minibatch(batch.indices[order], batch.inputs[order], batch.targets[order],
                             batch.n_total)
        a = augmented_elbo(batch, state, q_phi, family, McConfig(), NoiseSource(8))
        b = augmented_elbo(shuffled, state, q_phi, family, McConfig(), NoiseSource(8))
        assert abs(a.total - b.total) < 1e-10
        np.testing.assert_allclose(a.gradients['aug.mean'], b.gradients['aug.mean'], rtol=1e-8)


class TestBounds:

    def test_complexity(self):
        """ KL = 0, N = 100 and delta = 0.05 give a complexity of sqrt(log(400) / 200), about 0.17308. """
        np.testing.assert_allclose(pac_bayes_bound(0.1, 0., 100, 0.05), 0.1 + np.sqrt(np.log(400) / 200),
                                   rtol=1e-12)

    def test_monotone_in_kl(self):
        bounds = [pac_bayes_bound(0.2, kl, 100) for kl in (0., 1., 10., 100.)]
        assert np.all(np.diff(bounds) > 0)

    def test_decreasing_in_n(self):
        assert complexity_term(5., 1000) < complexity_term(5., 100)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            complexity_term(0., 0)
        with pytest.raises(ValueError):
            complexity_term(0., 10, delta=1.)
        with pytest.raises(ValueError):
            complexity_term(-1., 10)

    def test_bounded_risk(self):
        probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]])
        assert bounded_risk('classification', probs, np.array([0, 0, 0])) == pytest.approx(1 / 3)
        assert bounded_risk('regression', np.array([0., 3.]), np.array([0.5, 0.])) == pytest.approx(
            (0.25 + 1.) / 2)
