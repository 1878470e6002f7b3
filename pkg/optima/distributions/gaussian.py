import numpy as np

from ..gradengine.primitives import LOG_2PI


# log_std bounds applied wherever a scale is learned
LOG_STD_MIN = -20.
LOG_STD_MAX = 5.


class DiagonalGaussian:
    """
    Mean-field Gaussian N(mean, diag(exp(log_std)^2)). Instances are treated as immutable values.

    Attributes:

        mean (np.ndarray[float]) - location vector

        log_std (np.ndarray[float]) - log scale vector, same length

    Properties:

        std (np.ndarray[float]) - scale vector

        dim (int) - dimension

    """

    def __init__(self, mean, log_std):
        """
        Instantiate diagonal Gaussian.

        Args:

            mean (array like) - location vector

            log_std (array like or float) - log scale, broadcast to mean's length

        """
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        log_std = np.broadcast_to(
            np.asarray(log_std, dtype=np.float64), mean.shape).copy()
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(log_std))):
            raise ValueError('DiagonalGaussian parameters must be finite.')
        self.mean = mean
        self.log_std = log_std

    def __repr__(self):
        return 'DiagonalGaussian(mean={}, log_std={})'.format(
            self.mean.tolist(), self.log_std.tolist())

    def __eq__(self, other):
        return (isinstance(other, DiagonalGaussian)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.log_std, other.log_std))

    @property
    def std(self):
        """ Scale vector. """
        return np.exp(self.log_std)

    @property
    def dim(self):
        """ Dimension. """
        return self.mean.size

    @classmethod
    def standard(cls, dim, std=1.):
        """ Returns N(0, std^2 I) of dimension <dim>. """
        return cls(np.zeros(dim), np.full(dim, np.log(std)))

    def clamped(self):
        """ Returns copy with log_std clipped to [LOG_STD_MIN, LOG_STD_MAX]. """
        return DiagonalGaussian(
            self.mean, np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX))

    def to_dict(self):
        return dict(mean=self.mean.tolist(), log_std=self.log_std.tolist())

    @classmethod
    def from_dict(cls, data):
        return cls(data['mean'], data['log_std'])


class LogNormalPrior:
    """
    Log-normal distribution for positive quantities: log x ~ N(mu_log, sigma_log^2).

    Attributes:

        mu_log (float) - mean of log x

        sigma_log (float) - standard deviation of log x

    """

    def __init__(self, mu_log, sigma_log):
        if not sigma_log > 0:
            raise ValueError('sigma_log must be positive.')
        self.mu_log = float(mu_log)
        self.sigma_log = float(sigma_log)

    def to_log_gaussian(self):
        """ Returns the equivalent Gaussian over log x. """
        return DiagonalGaussian([self.mu_log], [np.log(self.sigma_log)])


def sample_reparameterized(dist, noise):
    """
    Reparameterized draw mean + exp(log_std) * noise.

    Args:

        dist (DiagonalGaussian)

        noise (np.ndarray[float]) - standard normal vector

    Returns:

        sample (np.ndarray[float])

    """
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != dist.mean.shape:
        raise ValueError('Noise has shape {}, distribution dimension is {:d}.'.format(
            noise.shape, dist.dim))
    return dist.mean + dist.std * noise


def reparameterize_node(graph, prefix, shape):
    """
    Adds a reparameterized draw to <graph>: leaves <prefix>.mean, <prefix>.log_std and <prefix>.noise of <shape>.

    Args:

        graph (ComputationGraph)

        prefix (str) - slot name prefix

        shape (tuple) - sample shape

    Returns:

        node (int) - mean + exp(log_std) * noise

    """
    mean = graph.leaf(prefix + '.mean', shape)
    log_std = graph.leaf(prefix + '.log_std', shape)
    noise = graph.leaf(prefix + '.noise', shape)
    return graph.add(mean, graph.multiply(graph.exp(log_std), noise))


def kl_diagonal_gaussians(q, p):
    """
    Closed-form KL(q || p) between diagonal Gaussians.

    Args:

        q (DiagonalGaussian)

        p (DiagonalGaussian)

    Returns:

        kl (float) - non-negative; exactly 0 when q equals p

    """
    if q.dim != p.dim:
        raise ValueError('KL requires equal dimensions ({:d} vs {:d}).'.format(
            q.dim, p.dim))
    if q.dim == 0:
        return 0.
    variance_ratio = np.exp(2. * (q.log_std - p.log_std))
    mean_term = (q.mean - p.mean)**2 * np.exp(-2. * p.log_std)
    terms = (p.log_std - q.log_std) + 0.5 * (variance_ratio + mean_term) - 0.5
    return float(max(np.sum(terms), 0.))


def kl_gradient(q, p):
    """
    Gradient of KL(q || p) with respect to the parameters of q.

    Returns:

        dmean (np.ndarray[float])

        dlog_std (np.ndarray[float])

    """
    if q.dim != p.dim:
        raise ValueError('KL requires equal dimensions.')
    dmean = (q.mean - p.mean) * np.exp(-2. * p.log_std)
    dlog_std = np.exp(2. * (q.log_std - p.log_std)) - 1.
    return dmean, dlog_std


def log_density(dist, x):
    """
    Exact log-density of <x>.

    Args:

        dist (DiagonalGaussian or LogNormalPrior)

        x (array like) - evaluation point (vector, or scalar for LogNormalPrior)

    Returns:

        log_p (float)

    """
    x = np.asarray(x, dtype=np.float64)
    if isinstance(dist, LogNormalPrior):
        if np.any(x <= 0):
            raise ValueError('Log-normal density requires x > 0.')
        log_x = np.log(x)
        z = (log_x - dist.mu_log) / dist.sigma_log
        return float(np.sum(-log_x - np.log(dist.sigma_log)
                            - 0.5 * LOG_2PI - 0.5 * z**2))
    x = np.atleast_1d(x)
    z = (x - dist.mean) * np.exp(-dist.log_std)
    return float(np.sum(-0.5 * LOG_2PI - dist.log_std - 0.5 * z**2))


def kl_monte_carlo(q, p, n, noise):
    """
    Monte Carlo estimate of KL(q || p).

    Args:

        q (DiagonalGaussian)

        p (DiagonalGaussian)

        n (int) - number of samples from q

        noise (NoiseSource)

    Returns:

        kl (float) - (1/n) sum [log q(x_i) - log p(x_i)]

    """
    if n < 1:
        raise ValueError('n must be at least 1.')
    eps = noise.standard_normal((int(n), q.dim))
    x = q.mean + q.std * eps
    log_q = np.sum(-0.5 * LOG_2PI - q.log_std - 0.5 * eps**2, axis=1)
    z = (x - p.mean) * np.exp(-p.log_std)
    log_p = np.sum(-0.5 * LOG_2PI - p.log_std - 0.5 * z**2, axis=1)
    return float(np.mean(log_q - log_p))
