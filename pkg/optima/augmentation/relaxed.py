import numpy as np
from scipy.special import digamma
from scipy.stats import beta as beta_distribution

from ..gradengine.primitives import stable_softmax
from ..distributions.gaussian import log_density


# mixup alpha = exp(log_alpha) is clamped to this range
ALPHA_MIN = 1e-4
ALPHA_MAX = 100.

# mixing coefficients are clamped to [LAMBDA_EPS, 1 - LAMBDA_EPS]
LAMBDA_EPS = 1e-6


def relaxed_one_hot(logits, temperature, gumbel):
    """ Returns softmax((logits + gumbel) / temperature). """
    return stable_softmax((np.asarray(logits) + gumbel) / temperature, -1)


def gumbel_softmax_sample(logits, temperature, noise):
    """
    Gumbel-Softmax relaxed categorical draw.

    Args:

        logits (np.ndarray[float]) - M unnormalized log-probabilities

        temperature (float) - relaxation temperature > 0

        noise (NoiseSource)

    Returns:

        weights (np.ndarray[float]) - point on the M-simplex

    """
    if not temperature > 0:
        raise ValueError('Temperature must be positive.')
    logits = np.asarray(logits, dtype=np.float64)
    return relaxed_one_hot(logits, temperature, noise.gumbel(logits.shape))


def relaxed_one_hot_vjp(weights, temperature, grad_weights):
    """ Pulls a gradient on relaxed weights back to the logits. """
    inner = np.dot(weights, grad_weights)
    return weights * (grad_weights - inner) / temperature


def alpha_from_log(log_alpha):
    """
    Maps log alpha to the clamped concentration.

    Returns:

        alpha (float)

        clamped (bool) - True if the clamp was active

    """
    alpha = float(np.exp(np.clip(log_alpha, -50., 50.)))
    clamped = not ALPHA_MIN <= alpha <= ALPHA_MAX
    return float(np.clip(alpha, ALPHA_MIN, ALPHA_MAX)), clamped


def beta_log_alpha_score(lam, alpha, clamped=False):
    """
    Derivative of log Beta(lam; alpha, alpha) with respect to log alpha.

    Args:

        lam (float) - mixing coefficient in (0, 1)

        alpha (float) - concentration

        clamped (bool) - if True, alpha is insensitive to log alpha

    Returns:

        score (float)

    """
    if clamped:
        return 0.
    d_alpha = np.log(lam) + np.log1p(-lam) - 2 * digamma(alpha) + 2 * digamma(2 * alpha)
    return float(alpha * d_alpha)


def sample_mixup_lambda(family, noise, q_phi=None):
    """
    Draws a mixing coefficient lambda ~ Beta(alpha, alpha).

    Args:

        family (AugmentationFamily) - mixup-beta family; family.phi holds log alpha

        noise (NoiseSource)

        q_phi (DiagonalGaussian) - if provided, log alpha is first drawn from q_phi and its log-density recorded

    Returns:

        lam (float) - clamped to [1e-6, 1 - 1e-6]

        score_info (dict) - log_alpha, alpha, log q(log alpha) (or None), d log Beta / d log alpha

    """
    if family.kind != 'mixup-beta':
        raise ValueError('sample_mixup_lambda requires a mixup-beta family.')
    if q_phi is not None:
        log_alpha = float(q_phi.mean[0] + q_phi.std[0] * noise.child('phi').standard_normal())
        log_q = log_density(q_phi, [log_alpha])
    else:
        log_alpha = float(family.phi[0])
        log_q = None
    alpha, clamped = alpha_from_log(log_alpha)
    lam = float(noise.child('lambda').beta(alpha, alpha))
    lam = float(np.clip(lam, LAMBDA_EPS, 1 - LAMBDA_EPS))
    score_info = dict(
        log_alpha=log_alpha,
        alpha=alpha,
        log_q=log_q,
        log_beta=float(beta_distribution.logpdf(lam, alpha, alpha)),
        score=beta_log_alpha_score(lam, alpha, clamped))
    return lam, score_info
