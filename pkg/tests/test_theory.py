import numpy as np
import pytest
from scipy.linalg import eigh

from optima.exceptions import NotPositiveDefiniteError
from optima.distributions.noise import NoiseSource
from optima.distributions.gaussian import DiagonalGaussian
from optima.models.network import NetworkSpec, ModelState
from optima.theory.checks import (TheoryReport, empirical_jensen_gap, jensen_gap_check,
                                  jensen_gap_sweep, invariance_expansion_check,
                                  invariance_directions, information_gain)
from optima.theory.conjugate import (ConjugateGaussianModel, posterior_shrinkage, shrinkage_bound,
                                     linear_regression_posterior)
from optima.theory.calibration import gaussian_mixture, ece_scaling_diagnostic
from optima.theory.suite import (available_checks, run_suite, check_dphi_nonneg, check_invariance,
                                 check_jensen_gap)


class TestReport:

    def test_status(self):
        assert TheoryReport('a', {}, passed=True).status == 'pass'
        assert TheoryReport('a', {}, passed=False).failed
        assert TheoryReport('a', {}).status == 'inconclusive'
        assert not TheoryReport('a', {}, status='diagnostic').failed

    def test_to_dict(self):
        report = TheoryReport('a', {'x': np.float64(1.5), 'v': np.arange(2)}, target=np.float64(2.),
                              passed=True)
        data = report.to_dict()
        assert data['quantities'] == {'x': 1.5, 'v': [0, 1]}
        assert type(data['target']) is float


class TestShrinkage:

    def test_no_replication(self):
        model = ConjugateGaussianModel(0., 3., 1., np.arange(5.))
        assert posterior_shrinkage(model, 1)[2] == 1.

    def test_hand_computed(self):
        """ N = 10 observations with unit noise under a nearly flat prior, replicated 5 times. """
        model = ConjugateGaussianModel(0., 1e6, 1., np.zeros(10))
        var_true, var_naive, ratio = posterior_shrinkage(model, 5)
        np.testing.assert_allclose([var_true, var_naive, ratio], [0.1, 0.02, 0.2], atol=1e-4)

    def test_flat_prior_limit(self):
        observations = NoiseSource(0).standard_normal(10)
        model = ConjugateGaussianModel(0., 1e9, 1., observations)
        for k in (2, 5, 10):
            assert abs(posterior_shrinkage(model, k)[2] - 1. / k) < 1e-6

    def test_bound(self):
        model = ConjugateGaussianModel(0.5, 1., 2., np.ones(4))
        for k in (1, 2, 5, 10):
            ratio = posterior_shrinkage(model, k)[2]
            assert abs(ratio - 1. / k) <= shrinkage_bound(model, k) * (1 + 1e-12)

    def test_posterior_mean(self):
        """ Posterior mean is the precision-weighted average of prior mean and data. """
        model = ConjugateGaussianModel(1., 1., 1., [3.])
        mean, var = model.posterior()
        assert mean == pytest.approx(2.)
        assert var == pytest.approx(0.5)

    def test_invalid(self):
        with pytest.raises(ValueError):
            ConjugateGaussianModel(0., 0., 1., [1.])
        model = ConjugateGaussianModel(0., 1., 1., [1.])
        with pytest.raises(ValueError):
            model.posterior(0)
        with pytest.raises(ValueError):
            model.posterior(1.5)

    def test_linear_regression_flat_prior(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-1, 1, size=30)
        y = 2 * x - 0.5 + 0.1 * rng.normal(size=30)
        mean, covariance = linear_regression_posterior(x, y, prior_var=1e12, obs_var=0.01)
        np.testing.assert_allclose(mean, np.polyfit(x, y, 1), rtol=1e-6)
        np.testing.assert_allclose(covariance, covariance.T)


class TestJensenGap:

    def test_linear_equality(self):
        """ For f(g) = g and g ~ N(0, 0.25) the gap equals its bound 0.125. """
        report = jensen_gap_check(lambda g: g, 1., DiagonalGaussian([0.], [np.log(0.5)]), 10**6,
                                  noise=NoiseSource(0))
        assert report.quantities['bound'] == pytest.approx(0.125)
        assert abs(report.quantities['gap'] - 0.125) < 0.002

    def test_constant(self):
        gap, se = empirical_jensen_gap(np.full(100, 2.5))
        assert abs(gap) < 1e-12
        assert se == 0.

    def test_concave_gap_is_positive(self):
        report = jensen_gap_check(lambda g: -g**2, 12 * 0.3, DiagonalGaussian([0.], [np.log(0.3)]),
                                  10**5, noise=NoiseSource(1))
        assert report.quantities['gap'] > 0
        assert report.quantities['gap'] <= report.quantities['bound']

    def test_random_functions(self):
        """ Every one of 100 random Lipschitz functions respects the bound. """
        report = check_jensen_gap(seed=0)
        assert report.quantities['random_total'] == 100
        assert report.quantities['random_passed'] == 100
        assert report.passed

    def test_sweep(self):
        curve = jensen_gap_sweep(np.sin, 1., [0.1, 0.5], 1000, noise=NoiseSource(2))
        assert [row['sigma'] for row in curve] == [0.1, 0.5]
        np.testing.assert_allclose([row['bound'] for row in curve], [0.005, 0.125])


class TestInvariance:

    def _linear(self):
        return ModelState.initialize(NetworkSpec([3, 2], bayes_last_layer=False), seed=1)

    def test_linear_network(self):
        """ A linear network has no second-order term and the expansion is exact. """
        report = invariance_expansion_check(self._linear(), np.ones(3), 1e-4, 10**5,
                                            noise=NoiseSource(3))
        assert report.quantities['second_order'] == 0
        assert report.passed

    def test_zero_perturbation(self):
        report = invariance_expansion_check(self._linear(), np.ones(3), 0., 10,
                                            noise=NoiseSource(4))
        assert report.quantities['monte_carlo'] == 0
        assert report.quantities['relative_error'] == 0

    def test_random_tanh_networks(self):
        """ The expansion holds within 5% on ten random tanh networks and is exact for a linear one. """
        report = check_invariance(seed=0)
        assert len(report.quantities['relative_errors']) == 10
        assert report.quantities['max_relative_error'] < 0.05
        assert report.passed

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            invariance_expansion_check(self._linear(), np.ones(3), -1., 10)

    def test_directions(self):
        """ The least sensitive direction of a 3 -> 2 linear map spans its null space. """
        state = self._linear()
        eigenvalues, eigenvectors = invariance_directions(state, np.zeros(3))
        assert np.all(np.diff(eigenvalues) >= 0)
        assert eigenvalues[0] < 1e-10
        weights = np.asarray(state.params['layer0.W'])
        np.testing.assert_allclose(weights.T @ eigenvectors[:, 0], np.zeros(2), atol=1e-8)


class TestInformationGain:

    def test_identity(self):
        np.testing.assert_allclose(information_gain(np.eye(2), np.eye(2)), np.log(2), rtol=1e-12)

    def test_generalized_eigenvalues(self):
        rng = np.random.default_rng(5)
        for d in (1, 3, 6):
            a, b = rng.normal(size=(d, d)), rng.normal(size=(d, d))
            h_noaug, h_aug = a @ a.T + 0.1 * np.eye(d), b @ b.T + 0.1 * np.eye(d)
            reference = 0.5 * np.sum(np.log1p(eigh(h_aug, h_noaug, eigvals_only=True)))
            np.testing.assert_allclose(information_gain(h_noaug, h_aug), reference, atol=1e-10)

    def test_diagonal(self):
        """ diag(1, 2) against diag(3, 4) gives 1/2 log((1 + 3)(1 + 2)) = 1/2 log 12. """
        gain = information_gain(np.diag([1., 2.]), np.diag([3., 4.]))
        np.testing.assert_allclose(gain, 1.242453, atol=1e-6)
        np.testing.assert_allclose(gain, 0.5 * np.log(12), rtol=1e-12)

    def test_vanishing_augmentation(self):
        """ The gain of eps * I over I tends to zero like d * eps / 2. """
        for d in (1, 3):
            gains = [information_gain(np.eye(d), eps * np.eye(d)) for eps in (1e-2, 1e-4, 1e-8)]
            assert np.all(np.diff(gains) < 0)
            np.testing.assert_allclose(gains[-1], d * 1e-8 / 2, rtol=1e-6)
            assert gains[-1] >= 0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            information_gain(np.eye(2), np.eye(3))

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            information_gain(np.array([[1., 2.], [2., 1.]]), np.eye(2))
        with pytest.raises(NotPositiveDefiniteError):
            information_gain(np.eye(2), np.array([[1., 0.5], [0., 1.]]))


class TestSuite:

    def test_available(self):
        checks = available_checks()
        assert checks['shrinkage'] == 'hard'
        assert checks['ece-scaling'] == 'diagnostic'

    def test_subset(self):
        reports = run_suite(['shrinkage', 'information-gain'], seed=0)
        assert [r.name for r in reports] == ['shrinkage', 'information-gain']
        assert all(r.passed for r in reports)

    def test_unknown(self):
        with pytest.raises(ValueError):
            run_suite(['shrinkage', 'no-such-check'])

    def test_advantage_check(self):
        report = check_dphi_nonneg(seed=1, n_triples=40)
        assert report.passed
        assert report.quantities['constant_advantage'] == 0


class TestEceScaling:

    def test_small_run(self):
        curve, fit = ece_scaling_diagnostic(k_values=(2, 1), seeds=(0,), n_train=20, n_test=40,
                                            epochs=2, n_mc_samples=3)
        assert [row['K'] for row in curve] == [1, 2]
        assert all(0. <= row['ece'] <= 1. for row in curve)
        assert fit['reference'][0] == 0.

    def test_requires_k_values(self):
        with pytest.raises(ValueError):
            ece_scaling_diagnostic(k_values=())

    @pytest.mark.slow
    def test_replication_raises_ece(self):
        """ Ten replicated copies are worse calibrated than one in at least four of five seeds. """
        curve, fit = ece_scaling_diagnostic(k_values=(1, 10))
        single, replicated = curve[0]['per_seed'], curve[1]['per_seed']
        assert len(single) == 5
        assert sum(r > s for s, r in zip(single, replicated)) >= 4
        assert fit['c'] > 0.


class TestMixture:

    def test_balanced_and_deterministic(self):
        a, b = gaussian_mixture(10, seed=0), gaussian_mixture(10, seed=0)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        assert a.targets.tolist() == [0, 1] * 5
        assert a.inputs.shape == (10, 2)
