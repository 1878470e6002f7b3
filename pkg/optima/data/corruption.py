import numpy as np

from ..distributions.noise import NoiseSource
from ..augmentation.warp import bilinear_affine_warp
from .dataset import Dataset


CORRUPTIONS = ('gaussian-noise', 'extra-rotation', 'mean-shift')


def corrupt_dataset(data, kind, severity):
    """
    Applies a distribution shift to the inputs of <data>.

    gaussian-noise adds N(0, severity^2) noise to every input entry. extra-rotation rotates every raster by severity radians in a random direction. mean-shift adds severity to every input entry.

    Args:

        data (Dataset)

        kind (str) - one of CORRUPTIONS

        severity (float) - non-negative strength; 0 leaves inputs untouched

    Returns:

        corrupted (Dataset) - metadata records the corruption kind and severity

    """
    if kind not in CORRUPTIONS:
        raise ValueError('Unknown corruption "{}".'.format(kind))
    if severity < 0:
        raise ValueError('Severity must be non-negative.')
    severity = float(severity)
    metadata = dict(data.metadata, corruption=kind, severity=severity)
    inputs = data.inputs.copy()
    noise = NoiseSource(data.metadata.get('seed', 0)).child('corrupt', kind, repr(severity))

    if severity > 0:
        if kind == 'gaussian-noise':
            inputs = inputs + severity * noise.standard_normal(inputs.shape)
        elif kind == 'mean-shift':
            inputs = inputs + severity
        else:
            if inputs.ndim != 3:
                raise ValueError('extra-rotation requires raster inputs.')
            signs = np.where(noise.uniform(size=len(inputs)) < 0.5, -1., 1.)
            for i, sign in enumerate(signs):
                inputs[i] = bilinear_affine_warp(inputs[i], sign * severity, (0., 0.))

    return Dataset(inputs, data.targets.copy(), data.task, metadata)
