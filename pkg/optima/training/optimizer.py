from collections import OrderedDict
import numpy as np

from ..exceptions import NonFiniteError


class OptimizerState:
    """
    Adaptive-moment accumulators.

    Attributes:

        m (OrderedDict) - first-moment estimate per parameter

        v (OrderedDict) - second-moment estimate per parameter

        step (int) - number of updates taken

    """

    def __init__(self, m=None, v=None, step=0):
        self.m = OrderedDict(m or {})
        self.v = OrderedDict(v or {})
        self.step = int(step)

    @classmethod
    def zeros_like(cls, params):
        """ Returns a fresh state for <params>. """
        return cls(OrderedDict((k, np.zeros(np.shape(p))) for k, p in params.items()),
                   OrderedDict((k, np.zeros(np.shape(p))) for k, p in params.items()))


def global_norm(grads):
    """ Returns the L2 norm of all gradients taken together. """
    return float(np.sqrt(sum(np.sum(np.square(g)) for g in grads.values())))


def clip_by_global_norm(grads, clip_norm):
    """
    Rescales gradients so that their global norm is at most <clip_norm>.

    Returns:

        clipped (OrderedDict)

        norm (float) - global norm before clipping

    """
    norm = global_norm(grads)
    if clip_norm is None or norm <= clip_norm:
        return OrderedDict(grads), norm
    factor = clip_norm / norm
    return OrderedDict((k, g * factor) for k, g in grads.items()), norm


def adam_step(state, params, grads, lr, betas=(0.9, 0.999), eps=1e-8):
    """
    One bias-corrected adaptive-moment descent step.

    Args:

        state (OptimizerState)

        params (dict) - {name: np.ndarray} parameters

        grads (dict) - {name: np.ndarray} gradients of the loss

        lr (float or dict) - learning rate, or {name: rate} per parameter

        betas (tuple) - moment decay rates

        eps (float) - denominator offset

    Returns:

        state (OptimizerState) - updated accumulators

        params (OrderedDict) - updated parameters

    """
    b1, b2 = betas
    for name, g in grads.items():
        if np.shape(g) != np.shape(params[name]):
            raise ValueError('Gradient of {:s} has shape {}, parameter {}.'.format(
                name, np.shape(g), np.shape(params[name])))
        if not np.all(np.isfinite(g)):
            raise NonFiniteError('Non-finite gradient for {:s}.'.format(name), block=name)

    t = state.step + 1
    m, v, updated = OrderedDict(), OrderedDict(), OrderedDict(params)
    for name, g in grads.items():
        m[name] = b1 * state.m.get(name, 0.) + (1 - b1) * g
        v[name] = b2 * state.v.get(name, 0.) + (1 - b2) * g**2
        m_hat = m[name] / (1 - b1**t)
        v_hat = v[name] / (1 - b2**t)
        rate = lr[name] if isinstance(lr, dict) else lr
        updated[name] = params[name] - rate * m_hat / (np.sqrt(v_hat) + eps)
    return OptimizerState(m, v, t), updated
