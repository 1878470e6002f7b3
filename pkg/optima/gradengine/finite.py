import numpy as np

from ..exceptions import NonFiniteError
from .graph import evaluate


def finite_difference_gradient(f, point, step=1e-5):
    """
    Central finite-difference gradient of a scalar function.

    Args:

        f (callable) - scalar function of a vector

        point (np.ndarray[float]) - evaluation point

        step (float) - finite-difference step h > 0

    Returns:

        gradient (np.ndarray[float]) - (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate

    """
    if step <= 0:
        raise ValueError('Step must be positive.')
    point = np.asarray(point, dtype=np.float64)
    gradient = np.zeros(point.shape)
    flat = gradient.ravel()
    for i in range(point.size):
        shifted = point.copy().ravel()
        shifted[i] += step
        upper = float(f(shifted.reshape(point.shape)))
        shifted[i] -= 2 * step
        lower = float(f(shifted.reshape(point.shape)))
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NonFiniteError(
                'Non-finite function value at coordinate {:d}.'.format(i))
        flat[i] = (upper - lower) / (2 * step)
    return gradient


def graph_function(graph, bindings, slot):
    """
    Returns a scalar function of one slot's value, all other bindings fixed. Used to check a graph with finite differences.

    Args:

        graph (ComputationGraph)

        bindings (dict) - baseline bindings

        slot (str) - slot that varies

    Returns:

        f (callable)

    """
    def f(value):
        shifted = dict(bindings)
        shifted[slot] = value
        return evaluate(graph, shifted)
    return f


def relative_error(a, b, floor=1e-8):
    """ Max elementwise |a-b| / max(|a|, |b|, floor). """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / scale)) if a.size else 0.
