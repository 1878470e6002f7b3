import numpy as np


class ConjugateGaussianModel:
    """
    Gaussian mean with a Gaussian prior and known observation variance.

    Attributes:

        prior_mean (float)

        prior_var (float)

        obs_var (float)

        observations (np.ndarray[float])

    """

    def __init__(self, prior_mean, prior_var, obs_var, observations):
        if not (prior_var > 0 and obs_var > 0):
            raise ValueError('Variances must be positive.')
        self.prior_mean = float(prior_mean)
        self.prior_var = float(prior_var)
        self.obs_var = float(obs_var)
        self.observations = np.atleast_1d(np.asarray(observations, dtype=np.float64))

    @property
    def n(self):
        return self.observations.size

    def posterior(self, k=1):
        """
        Exact posterior with every observation replicated <k> times.

        Returns:

            mean (float)

            var (float) - 1 / (1/prior_var + N k / obs_var)

        """
        if int(k) != k or k < 1:
            raise ValueError('k must be a positive integer.')
        precision = 1. / self.prior_var + self.n * k / self.obs_var
        var = 1. / precision
        mean = var * (self.prior_mean / self.prior_var + k * self.observations.sum() / self.obs_var)
        return mean, var


def posterior_shrinkage(model, k):
    """
    Posterior variance under k-fold replicated observations relative to the exact posterior.

    Args:

        model (ConjugateGaussianModel)

        k (int) - replication count

    Returns:

        var_true (float)

        var_naive (float)

        ratio (float) - var_naive / var_true, approaching 1/k as the prior flattens

    """
    _, var_true = model.posterior(1)
    _, var_naive = model.posterior(k)
    return var_true, var_naive, var_naive / var_true


def shrinkage_bound(model, k):
    """ Returns obs_var / (k N prior_var), an upper bound on |ratio - 1/k|. """
    return model.obs_var / (k * model.n * model.prior_var)


def linear_regression_posterior(x, y, prior_var, obs_var):
    """
    Exact posterior over (slope, intercept) of y = w x + b + noise under an isotropic Gaussian prior.

    Args:

        x (np.ndarray[float]) - N inputs

        y (np.ndarray[float]) - N targets

        prior_var (float) - prior variance of w and b

        obs_var (float) - observation noise variance

    Returns:

        mean (np.ndarray[float]) - posterior mean of (w, b)

        covariance (np.ndarray[float]) - 2 x 2 posterior covariance

    """
    design = np.stack((np.ravel(x), np.ones(np.size(x))), axis=1)
    precision = np.eye(2) / prior_var + design.T @ design / obs_var
    covariance = np.linalg.inv(precision)
    mean = covariance @ (design.T @ np.ravel(y)) / obs_var
    return mean, covariance
