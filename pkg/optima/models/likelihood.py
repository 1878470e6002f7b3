import numpy as np
from scipy.special import logsumexp

from ..gradengine.primitives import LOG_2PI


def one_hot(labels, n_classes):
    """ Returns one-hot rows for integer <labels>. """
    labels = np.asarray(labels)
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.round(labels)):
            raise ValueError('Class labels must be integers.')
        labels = labels.astype(int)
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError('Class labels must lie in [0, {:d}).'.format(n_classes))
    return np.eye(n_classes)[labels]


def log_likelihood(head, output, y, noise_std=1.):
    """
    Log-likelihood of one target.

    Args:

        head (str) - 'gaussian' or 'categorical'

        output (np.ndarray[float]) - predicted mean (gaussian) or logits (categorical)

        y (np.ndarray or int) - target values, a class index or a soft target vector

        noise_std (float) - observation noise of the gaussian head

    Returns:

        log_p (float)

    """
    output = np.asarray(output, dtype=np.float64)
    if head == 'gaussian':
        y = np.asarray(y, dtype=np.float64).reshape(output.shape)
        residual = (y - output) / noise_std
        return float(np.sum(-0.5 * LOG_2PI - np.log(noise_std) - 0.5 * residual**2))
    if head != 'categorical':
        raise ValueError('Unknown head "{}".'.format(head))
    log_probs = output - logsumexp(output)
    y = np.asarray(y)
    if y.ndim == 0:
        return float(log_probs[one_hot(y, output.size).argmax()])
    if y.shape != output.shape:
        raise ValueError('Soft target has shape {}, logits {}.'.format(y.shape, output.shape))
    return float(np.dot(y, log_probs))


def mixup_log_likelihood(head, output, y_a, y_b, lam, noise_std=1.):
    """ Returns lam * log p(y_a) + (1 - lam) * log p(y_b). """
    lp_a = log_likelihood(head, output, y_a, noise_std)
    if lam == 1:
        return lp_a
    lp_b = log_likelihood(head, output, y_b, noise_std)
    return lam * lp_a + (1 - lam) * lp_b


# ============================= GRAPH BUILDING ================================


def build_log_likelihood(graph, spec, output, mixed=False):
    """
    Appends per-sample log-likelihoods to <graph>.

    Categorical heads read soft targets from leaf 'y', which also covers mixed labels. Gaussian heads read leaf 'y'; with <mixed> they also read 'y_partner' and the weights 'mix' and 'mix_partner'.

    Args:

        graph (ComputationGraph)

        spec (NetworkSpec)

        output (int) - network output node of shape (..., output_dim)

        mixed (bool) - if True, targets are mixed pairs

    Returns:

        loglik (int) - node of shape (...)

    """
    shape = graph.shape_of(output)
    y = graph.leaf('y', shape)
    if spec.head == 'categorical':
        fit = graph.sum(graph.multiply(y, output), axis=-1)
        return graph.subtract(fit, graph.logsumexp(output, axis=-1))

    log_std = graph.constant(np.full(shape, np.log(spec.noise_std)), name='noise.log_std')
    loglik = graph.sum(graph.gaussian_log_density(y, output, log_std), axis=-1)
    if not mixed:
        return loglik
    partner = graph.leaf('y_partner', shape)
    loglik_partner = graph.sum(graph.gaussian_log_density(partner, output, log_std), axis=-1)
    mix = graph.leaf('mix', shape[:-1])
    mix_partner = graph.leaf('mix_partner', shape[:-1])
    return graph.add(graph.multiply(mix, loglik), graph.multiply(mix_partner, loglik_partner))
