from collections import OrderedDict
import numpy as np

from ..distributions.gaussian import (
    DiagonalGaussian, LogNormalPrior, LOG_STD_MIN, LOG_STD_MAX)
from .warp import bilinear_affine_warp, warp_jacobian
from .relaxed import (
    relaxed_one_hot, relaxed_one_hot_vjp, sample_mixup_lambda)


KINDS = ('none', 'additive-shift', 'gaussian-shift', 'affine-image', 'categorical-choice', 'mixup-beta')

SHIFT_KINDS = ('additive-shift', 'gaussian-shift')


# ========================= DISCRETE TRANSFORM MENUS ==========================

RASTER_TRANSFORMS = OrderedDict([
    ('identity', lambda x: x),
    ('flip-horizontal', lambda x: x[:, ::-1]),
    ('flip-vertical', lambda x: x[::-1, :]),
    ('rotate-180', lambda x: x[::-1, ::-1])])

VECTOR_TRANSFORMS = OrderedDict([
    ('identity', lambda x: x),
    ('reverse', lambda x: x[::-1]),
    ('negate', lambda x: -x)])


class TransformSample:
    """
    One draw of transformation parameters.

    Attributes:

        gamma (np.ndarray[float]) - transformation parameters

        noise (np.ndarray[float]) - exogenous noise behind gamma (standard normal or Gumbel draws)

        log_density_q (float) - log q(phi) of the drawn phi, score-function path only

        score (float) - d log p(gamma | phi) / d phi, score-function path only

    """

    def __init__(self, gamma, noise=None, log_density_q=None, score=None):
        self.gamma = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
        self.noise = noise
        self.log_density_q = log_density_q
        self.score = score

    def __repr__(self):
        return 'TransformSample(gamma={})'.format(self.gamma.tolist())


class AugmentationFamily:
    """
    Transformation family T_gamma together with p(gamma | phi).

    Layouts of phi by kind:

        none: empty

        additive-shift: (mu, log sigma); gamma in R^D is added to the input

        gaussian-shift: (log sigma,); gamma ~ N(0, sigma^2 I) in R^D is added to the input

        affine-image: (mu_omega, log sigma_omega, mu_tx, log sigma_tx, mu_ty, log sigma_ty)

        categorical-choice: logits over the M transforms of the menu

        mixup-beta: (log alpha,); lambda ~ Beta(alpha, alpha)

    Attributes:

        kind (str) - family kind

        phi (np.ndarray[float]) - current augmentation parameters

        phi_prior (DiagonalGaussian) - prior p(phi)

        input_shape (tuple) - shape of a single input

        temperature (float) - Gumbel-Softmax temperature (categorical-choice)

        transforms (list of str) - transform menu (categorical-choice)

    """

    def __init__(self, kind, phi, phi_prior, input_shape,
                 temperature=0.5,
                 transforms=None):
        if kind not in KINDS:
            raise ValueError('Unknown augmentation kind "{}".'.format(kind))
        self.kind = kind
        self.phi = np.asarray(phi, dtype=np.float64).reshape(-1)
        self.phi_prior = phi_prior
        self.input_shape = tuple(input_shape)
        self.temperature = float(temperature)
        if kind == 'categorical-choice':
            if not self.temperature > 0:
                raise ValueError('Temperature must be positive.')
            menu = self.menu
            self.transforms = list(transforms or menu.keys())
            unknown = set(self.transforms) - set(menu.keys())
            if unknown:
                raise ValueError('Unknown transforms {}.'.format(sorted(unknown)))
        else:
            self.transforms = []
        if self.phi.size != self.phi_dim:
            raise ValueError('{:s} expects {:d} phi entries, got {:d}.'.format(
                kind, self.phi_dim, self.phi.size))

    def __repr__(self):
        return 'AugmentationFamily({:s}, phi={})'.format(self.kind, self.phi.tolist())

    @property
    def is_raster(self):
        return len(self.input_shape) == 2

    @property
    def menu(self):
        """ Available discrete transforms for the input shape. """
        return RASTER_TRANSFORMS if self.is_raster else VECTOR_TRANSFORMS

    @property
    def phi_dim(self):
        return dict(
            none=0,
            additive_shift=2,
            gaussian_shift=1,
            affine_image=6,
            categorical_choice=len(self.transforms),
            mixup_beta=1)[self.kind.replace('-', '_')]

    @property
    def coordinates(self):
        """ Names of the augmentation coordinates. """
        if self.kind in SHIFT_KINDS:
            return ['shift']
        if self.kind == 'affine-image':
            return ['omega', 'tx', 'ty']
        if self.kind == 'categorical-choice':
            return list(self.transforms)
        if self.kind == 'mixup-beta':
            return ['alpha']
        return []

    @property
    def pathwise(self):
        """ True if gamma is a differentiable function of phi. """
        return self.kind != 'mixup-beta'

    def with_phi(self, phi):
        """ Returns a copy of the family with parameters <phi>. """
        return AugmentationFamily(self.kind, phi, self.phi_prior, self.input_shape,
                                  temperature=self.temperature,
                                  transforms=self.transforms or None)

    def summary(self, phi=None):
        """
        Returns readable augmentation parameters.

        Args:

            phi (np.ndarray[float]) - parameters to summarise, defaults to self.phi

        Returns:

            summary (OrderedDict) - {column: value}; (mean, std) per coordinate for Gaussian kinds

        """
        phi = self.phi if phi is None else np.asarray(phi)
        summary = OrderedDict()
        if self.kind in ('additive-shift', 'affine-image'):
            for k, name in enumerate(self.coordinates):
                summary['{:s}_mean'.format(name)] = float(phi[2*k])
                log_std = np.clip(phi[2*k+1], LOG_STD_MIN, LOG_STD_MAX)
                summary['{:s}_std'.format(name)] = float(np.exp(log_std))
        elif self.kind == 'gaussian-shift':
            summary['shift_std'] = float(np.exp(np.clip(phi[0], LOG_STD_MIN, LOG_STD_MAX)))
        elif self.kind == 'categorical-choice':
            probs = relaxed_one_hot(phi, 1., 0.)
            for name, p in zip(self.coordinates, probs):
                summary['{:s}_prob'.format(name)] = float(p)
        elif self.kind == 'mixup-beta':
            summary['alpha_mean'] = float(np.exp(phi[0]))
        return summary

    def to_dict(self):
        return dict(kind=self.kind,
                    phi=self.phi.tolist(),
                    phi_prior=self.phi_prior.to_dict() if self.phi_prior.dim else None,
                    input_shape=list(self.input_shape),
                    temperature=self.temperature,
                    transforms=list(self.transforms))

    @classmethod
    def from_dict(cls, data):
        prior = data.get('phi_prior')
        prior = DiagonalGaussian.from_dict(prior) if prior else DiagonalGaussian([], [])
        return cls(data['kind'], data['phi'], prior, data['input_shape'],
                   temperature=data.get('temperature', 0.5),
                   transforms=data.get('transforms') or None)


# ============================ DEFAULT FAMILIES ===============================


def default_family(kind, input_shape,
                   sigma_init=0.1,
                   prior_scale=0.2,
                   q_log_std=np.log(0.1),
                   temperature=0.5,
                   transforms=None,
                   alpha_init=0.2,
                   scale_spread=0.5):
    """
    Returns a family template, initial q(phi) and the prior p(phi).

    Scale components are carried on log scale; their priors are log-normal on the scale itself.

    Args:

        kind (str) - family kind

        input_shape (tuple) - shape of a single input

        sigma_init (float) - initial augmentation scale (Gaussian kinds)

        prior_scale (float) - prior scale of the augmentation location and prior median of its scale

        q_log_std (float) - initial log_std of q(phi)

        temperature (float) - Gumbel-Softmax temperature

        transforms (list of str) - transform menu (categorical-choice)

        alpha_init (float) - initial mixup concentration

        scale_spread (float) - standard deviation of log sigma under its log-normal prior

    Returns:

        family (AugmentationFamily) - template with phi at the q(phi) mean

        q_phi (DiagonalGaussian) - initial variational distribution over phi

        phi_prior (DiagonalGaussian)

    """
    scale_prior = LogNormalPrior(np.log(prior_scale), scale_spread).to_log_gaussian()
    if kind == 'gaussian-shift':
        means = [np.log(sigma_init)]
        prior = scale_prior
    elif kind in ('additive-shift', 'affine-image'):
        n = 1 if kind == 'additive-shift' else 3
        means, prior_means, prior_log_stds = [], [], []
        for _ in range(n):
            means += [0., np.log(sigma_init)]
            prior_means += [0., scale_prior.mean[0]]
            prior_log_stds += [np.log(prior_scale), scale_prior.log_std[0]]
        prior = DiagonalGaussian(prior_means, prior_log_stds)
    elif kind == 'categorical-choice':
        menu = RASTER_TRANSFORMS if len(input_shape) == 2 else VECTOR_TRANSFORMS
        m = len(transforms or menu)
        means = np.zeros(m)
        prior = DiagonalGaussian.standard(m)
    elif kind == 'mixup-beta':
        means = [np.log(alpha_init)]
        prior = DiagonalGaussian([np.log(alpha_init)], [np.log(2.)])
    elif kind == 'none':
        means = []
        prior = DiagonalGaussian([], [])
    else:
        raise ValueError('Unknown augmentation kind "{}".'.format(kind))
    q_phi = DiagonalGaussian(means, q_log_std) if len(means) else DiagonalGaussian([], [])
    family = AugmentationFamily(kind, q_phi.mean, prior, input_shape,
                                temperature=temperature,
                                transforms=transforms)
    return family, q_phi, prior


# ============================== OPERATIONS ===================================


def _check_phi(family):
    if not np.all(np.isfinite(family.phi)):
        raise ValueError('Augmentation parameters must be finite.')


def _gaussian_gamma(phi, eps):
    """ gamma_k = mu_k + sigma_k eps_k for (mu, log sigma) pairs. """
    mu = phi[0::2]
    sigma = np.exp(np.clip(phi[1::2], LOG_STD_MIN, LOG_STD_MAX))
    return mu + sigma * eps


def sample_gamma(family, noise, q_phi=None):
    """
    Draws transformation parameters gamma ~ p(gamma | phi).

    Args:

        family (AugmentationFamily)

        noise (NoiseSource) - per-example stream

        q_phi (DiagonalGaussian) - used by mixup-beta to record log q(phi)

    Returns:

        sample (TransformSample)

    """
    _check_phi(family)
    if family.kind == 'none':
        return TransformSample(np.zeros(0))
    if family.kind == 'additive-shift':
        eps = noise.standard_normal(int(np.prod(family.input_shape)))
        gamma = family.phi[0] + np.exp(np.clip(family.phi[1], LOG_STD_MIN, LOG_STD_MAX)) * eps
        return TransformSample(gamma, noise=eps)
    if family.kind == 'gaussian-shift':
        eps = noise.standard_normal(int(np.prod(family.input_shape)))
        return TransformSample(np.exp(np.clip(family.phi[0], LOG_STD_MIN, LOG_STD_MAX)) * eps, noise=eps)
    if family.kind == 'affine-image':
        eps = noise.standard_normal(3)
        return TransformSample(_gaussian_gamma(family.phi, eps), noise=eps)
    if family.kind == 'categorical-choice':
        gumbel = noise.gumbel(family.phi.size)
        weights = relaxed_one_hot(family.phi, family.temperature, gumbel)
        return TransformSample(weights, noise=gumbel)
    lam, info = sample_mixup_lambda(family, noise, q_phi=q_phi)
    return TransformSample([lam], log_density_q=info['log_q'], score=info['score'])


def sample_gamma_batch(family, noise, n_samples):
    """
    Draws <n_samples> transformation parameters for one example.

    Shift kinds take all draws from <noise> at once; other kinds use one child stream per draw.

    Returns:

        samples (list of TransformSample)

    """
    if family.kind not in SHIFT_KINDS:
        return [sample_gamma(family, noise.child(j)) for j in range(n_samples)]
    _check_phi(family)
    eps = noise.standard_normal((n_samples, int(np.prod(family.input_shape))))
    if family.kind == 'additive-shift':
        mu, log_sigma = family.phi
    else:
        mu, log_sigma = 0., family.phi[0]
    gamma = mu + np.exp(np.clip(log_sigma, LOG_STD_MIN, LOG_STD_MAX)) * eps
    return [TransformSample(g, noise=e) for g, e in zip(gamma, eps)]


def apply_transform(family, sample, x, partner=None):
    """
    Applies T_gamma to a single input.

    Args:

        family (AugmentationFamily)

        sample (TransformSample)

        x (np.ndarray[float]) - input of shape family.input_shape

        partner (np.ndarray[float]) - second input for mixup-beta (defaults to x)

    Returns:

        x_transformed (np.ndarray[float])

    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != family.input_shape:
        raise ValueError('Input has shape {}, family expects {}.'.format(
            x.shape, family.input_shape))
    if family.kind == 'none':
        return x.copy()
    if family.kind in SHIFT_KINDS:
        return x + sample.gamma.reshape(x.shape)
    if family.kind == 'affine-image':
        if x.ndim != 2:
            raise ValueError('affine-image requires an H x W raster.')
        omega, tx, ty = sample.gamma
        return bilinear_affine_warp(x, omega, (tx, ty))
    if family.kind == 'categorical-choice':
        menu = family.menu
        out = np.zeros(x.shape)
        for w, name in zip(sample.gamma, family.transforms):
            out += w * menu[name](x)
        return out
    lam = sample.gamma[0]
    partner = x if partner is None else np.asarray(partner, dtype=np.float64)
    return lam * x + (1 - lam) * partner


def pullback(family, sample, x, grad_x):
    """
    Pulls a gradient on the transformed input back to phi.

    Args:

        family (AugmentationFamily)

        sample (TransformSample) - the draw used to produce the transformed input

        x (np.ndarray[float]) - untransformed input

        grad_x (np.ndarray[float]) - gradient with respect to T_gamma(x)

    Returns:

        grad_phi (np.ndarray[float]) - zero for non-pathwise kinds

    """
    grad_phi = np.zeros(family.phi_dim)
    if family.kind in ('none', 'mixup-beta'):
        return grad_phi
    grad_x = np.asarray(grad_x, dtype=np.float64).reshape(family.input_shape)

    if family.kind == 'additive-shift':
        grad_gamma = grad_x.ravel()
        active = LOG_STD_MIN <= family.phi[1] <= LOG_STD_MAX
        sigma = np.exp(np.clip(family.phi[1], LOG_STD_MIN, LOG_STD_MAX))
        grad_phi[0] = grad_gamma.sum()
        grad_phi[1] = np.dot(grad_gamma, sigma * sample.noise) if active else 0.
        return grad_phi

    if family.kind == 'gaussian-shift':
        active = LOG_STD_MIN <= family.phi[0] <= LOG_STD_MAX
        sigma = np.exp(np.clip(family.phi[0], LOG_STD_MIN, LOG_STD_MAX))
        grad_phi[0] = np.dot(grad_x.ravel(), sigma * sample.noise) if active else 0.
        return grad_phi

    if family.kind == 'affine-image':
        omega, tx, ty = sample.gamma
        _, jacobian = warp_jacobian(x, omega, (tx, ty))
        grad_gamma = np.einsum('khw,hw->k', jacobian, grad_x)
        log_sigma = family.phi[1::2]
        active = (log_sigma >= LOG_STD_MIN) & (log_sigma <= LOG_STD_MAX)
        sigma = np.exp(np.clip(log_sigma, LOG_STD_MIN, LOG_STD_MAX))
        grad_phi[0::2] = grad_gamma
        grad_phi[1::2] = grad_gamma * sigma * sample.noise * active
        return grad_phi

    menu = family.menu
    grad_weights = np.array([np.sum(grad_x * menu[name](x)) for name in family.transforms])
    return relaxed_one_hot_vjp(sample.gamma, family.temperature, grad_weights)
