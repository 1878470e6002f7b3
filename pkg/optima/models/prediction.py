import numpy as np

from ..gradengine.primitives import stable_softmax
from ..distributions.noise import NoiseSource
from ..augmentation.families import sample_gamma, apply_transform
from .network import forward


def transform_inputs(family, q_phi, inputs, noise):
    """
    Applies one augmentation draw to every input.

    phi is drawn once from q_phi; gamma is drawn per example. mixup-beta has no single-input form and leaves inputs untouched.

    Args:

        family (AugmentationFamily) - template

        q_phi (DiagonalGaussian) - distribution over phi, None to use family.phi

        inputs (np.ndarray[float]) - N inputs

        noise (NoiseSource)

    Returns:

        transformed (np.ndarray[float])

    """
    if family is None or family.kind in ('none', 'mixup-beta'):
        return np.asarray(inputs, dtype=np.float64)
    if q_phi is not None and q_phi.dim:
        eps = noise.child('phi').standard_normal(q_phi.dim)
        family = family.with_phi(q_phi.mean + q_phi.std * eps)
    transformed = np.empty(np.shape(inputs))
    for i, x in enumerate(inputs):
        sample = sample_gamma(family, noise.child('gamma', i))
        transformed[i] = apply_transform(family, sample, x)
    return transformed


def predict(state, x, n_samples=100,
            noise=None,
            marginalize_aug=False,
            family=None,
            q_phi=None):
    """
    Monte Carlo predictive distribution.

    Args:

        state (ModelState)

        x (np.ndarray[float]) - inputs of shape (N, *input_shape)

        n_samples (int) - number of forward passes

        noise (NoiseSource) - defaults to NoiseSource(0)

        marginalize_aug (bool) - if True, each pass also draws phi and gamma

        family (AugmentationFamily) - used when marginalize_aug is set

        q_phi (DiagonalGaussian) - used when marginalize_aug is set

    Returns:

        probs (np.ndarray[float]) - N x C mean class probabilities (categorical head)

        OR

        mean, variance (np.ndarray[float]) - N x D MC mean and variance of predicted means (gaussian head)

    """
    if n_samples < 1:
        raise ValueError('n_samples must be at least 1.')
    noise = NoiseSource(0) if noise is None else noise
    x = np.asarray(x, dtype=np.float64)
    spec = state.spec

    outputs = []
    for k in range(int(n_samples)):
        theta_noise = None
        if state.theta_dim:
            theta_noise = noise.child('theta', k).standard_normal(state.theta_dim)
        inputs = x
        if marginalize_aug:
            inputs = transform_inputs(family, q_phi, x, noise.child('aug', k))
        output = forward(state, theta_noise, inputs)
        if spec.head == 'categorical':
            output = stable_softmax(output, -1)
        outputs.append(output)
    outputs = np.stack(outputs)

    if spec.head == 'categorical':
        return outputs.mean(axis=0)
    return outputs.mean(axis=0), outputs.var(axis=0)
