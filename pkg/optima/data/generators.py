import numpy as np

from ..distributions.noise import NoiseSource
from .dataset import Dataset


X_RANGE = (-3., 3.)
NOISE_STD = 0.2
HETEROSCEDASTIC_STD = 0.15


def regression_mean(x):
    """ Noiseless regression function sin(2x) + 0.5 cos(3x). """
    return np.sin(2 * x) + 0.5 * np.cos(3 * x)


def sample_regression(n, noise):
    """
    Draw <n> points of the synthetic regression problem.

    Args:

        n (int) - number of points

        noise (NoiseSource)

    Returns:

        x (np.ndarray[float]) - inputs uniform on [-3, 3]

        y (np.ndarray[float]) - sin(2x) + 0.5 cos(3x) + eps + eps' sin(x)

    """
    x = noise.child('x').uniform(*X_RANGE, size=n)
    return x, regression_targets(x, noise)


def regression_targets(x, noise):
    """ Returns noisy targets at inputs <x>. """
    x = np.asarray(x, dtype=np.float64)
    eps = NOISE_STD * noise.child('eps').standard_normal(x.shape)
    eps_hetero = HETEROSCEDASTIC_STD * noise.child('hetero').standard_normal(x.shape)
    return regression_mean(x) + eps + eps_hetero * np.sin(x)


def gen_synthetic_regression(n_train=50, n_test=1000, seed=0):
    """
    Heteroscedastic 1-D regression problem.

    Args:

        n_train (int) - number of training points

        n_test (int) - number of test points

        seed (int)

    Returns:

        train (Dataset)

        test (Dataset)

    """
    if n_train < 1 or n_test < 1:
        raise ValueError('Counts must be at least 1.')
    noise = NoiseSource(seed).child('synthetic-regression')
    datasets = []
    for split, n in (('train', n_train), ('test', n_test)):
        x, y = sample_regression(int(n), noise.child(split))
        metadata = dict(generator='synthetic-regression', seed=int(seed), split=split)
        datasets.append(Dataset(x[:, None], y, 'regression', metadata))
    return tuple(datasets)
