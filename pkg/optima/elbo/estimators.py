import numpy as np

from ..exceptions import DegenerateLikelihoodError
from ..augmentation.families import apply_transform
from ..models.network import forward
from ..models.likelihood import log_likelihood, mixup_log_likelihood


ESTIMATORS = ('marginalized', 'naive', 'replicated')


def log_mean_exp(values, axis=None):
    """
    Shift-stable log((1/s) sum exp(values)).

    Args:

        values (np.ndarray[float]) - log-likelihood samples

        axis (int) - reduction axis, all axes if None

    Returns:

        value (float or np.ndarray[float]) - exact for constant inputs

    """
    values = np.asarray(values, dtype=np.float64)
    count = values.size if axis is None else values.shape[axis]
    if count < 1:
        raise ValueError('At least one sample is required.')
    if np.all(values == -np.inf, axis=axis).any():
        raise DegenerateLikelihoodError('Every likelihood sample is zero.')
    shift = np.max(values, axis=axis, keepdims=True)
    centred = np.sum(np.exp(values - shift), axis=axis, keepdims=True) / count
    result = np.log(centred) + shift
    return result.item() if axis is None else np.squeeze(result, axis=axis)


def combine(loglik, estimator='marginalized'):
    """
    Reduces per-sample log-likelihoods over the last axis.

    Args:

        loglik (np.ndarray[float]) - (..., s) samples

        estimator (str) - 'marginalized' (log-mean-exp), 'naive' (mean) or 'replicated' (sum)

    Returns:

        value (np.ndarray[float]) - shape (...)

    """
    loglik = np.asarray(loglik, dtype=np.float64)
    if estimator == 'marginalized':
        return log_mean_exp(loglik, axis=-1)
    if estimator == 'naive':
        return np.mean(loglik, axis=-1)
    if estimator == 'replicated':
        return np.sum(loglik, axis=-1)
    raise ValueError('Unknown estimator "{}".'.format(estimator))


def sample_logliks(x, y, state, theta_noise, family, gamma_samples, partner=None):
    """
    Log-likelihood of one example under each transformation sample.

    Args:

        x (np.ndarray[float]) - untransformed input

        y (np.ndarray or int) - target

        state (ModelState)

        theta_noise (np.ndarray[float]) - theta draw, None for point networks

        family (AugmentationFamily)

        gamma_samples (list of TransformSample)

        partner (tuple) - (x, y) of the mixup partner

    Returns:

        loglik (np.ndarray[float]) - one value per sample

    """
    if len(gamma_samples) < 1:
        raise ValueError('At least one transformation sample is required.')
    spec = state.spec
    x_partner, y_partner = partner if partner is not None else (x, y)
    transformed = np.stack([
        apply_transform(family, sample, x, partner=x_partner) for sample in gamma_samples])
    outputs = forward(state, theta_noise, transformed)
    loglik = []
    for sample, output in zip(gamma_samples, outputs):
        if family.kind == 'mixup-beta':
            loglik.append(mixup_log_likelihood(
                spec.head, output, y, y_partner, sample.gamma[0], spec.noise_std))
        else:
            loglik.append(log_likelihood(spec.head, output, y, spec.noise_std))
    return np.array(loglik)


def marginalized_loglik(x, y, state, theta_noise, family, gamma_samples, partner=None):
    """ Returns log (1/s) sum_j p(y | T_gamma_j(x), theta). """
    return log_mean_exp(sample_logliks(
        x, y, state, theta_noise, family, gamma_samples, partner))


def naive_loglik(x, y, state, theta_noise, family, gamma_samples, partner=None):
    """ Returns (1/K) sum_k log p(y | T_gamma_k(x), theta). """
    return float(np.mean(sample_logliks(
        x, y, state, theta_noise, family, gamma_samples, partner)))


def marginalization_advantage(x, y, state, theta_noise, family, gamma_samples, partner=None):
    """
    Marginalized minus naive log-likelihood over shared transformation samples.

    Returns:

        advantage (float) - non-negative up to rounding; 0 when every sample has the same likelihood

    """
    loglik = sample_logliks(x, y, state, theta_noise, family, gamma_samples, partner)
    return advantage_from_logliks(loglik)


def advantage_from_logliks(loglik):
    """ Returns log-mean-exp minus mean over the last axis. """
    loglik = np.asarray(loglik, dtype=np.float64)
    advantage = log_mean_exp(loglik, axis=-1) - np.mean(loglik, axis=-1)
    # equal samples give exactly zero
    constant = np.all(loglik == loglik[..., :1], axis=-1)
    advantage = np.where(constant, 0., advantage)
    return float(advantage) if advantage.ndim == 0 else advantage
