import numpy as np

from ..distributions.noise import NoiseSource
from ..augmentation.warp import bilinear_affine_warp
from .dataset import Dataset


GLYPHS = ('bar', 'cross', 'L', 'diagonal')


def render_glyph(name, size):
    """
    Draws a centred glyph on a blank raster.

    Args:

        name (str) - one of GLYPHS

        size (int) - raster side length

    Returns:

        image (np.ndarray[float]) - size x size raster with values in {0, 1}

    """
    image = np.zeros((size, size))
    lo, hi = size // 4, size - size // 4
    mid = size // 2
    if name == 'bar':
        image[lo:hi, mid-1:mid+1] = 1.
    elif name == 'cross':
        image[lo:hi, mid-1:mid+1] = 1.
        image[mid-1:mid+1, lo:hi] = 1.
    elif name == 'L':
        image[lo:hi, lo:lo+2] = 1.
        image[hi-2:hi, lo:hi] = 1.
    elif name == 'diagonal':
        for k in range(lo, hi):
            image[k, k] = 1.
            image[k, min(k + 1, size - 1)] = 1.
    else:
        raise ValueError('Unknown glyph "{}".'.format(name))
    return image


def gen_glyph_classification(n, size=16, n_classes=4, pose_jitter=0.5, seed=0):
    """
    Procedural glyph images with random pose.

    Labels are assigned round-robin. Each image is rotated by an angle uniform on [-pose_jitter, pose_jitter] radians and shifted by fractions uniform on [-0.1 pose_jitter, 0.1 pose_jitter] of its width and height.

    Args:

        n (int) - number of images

        size (int) - raster side length, at least 8

        n_classes (int) - number of glyph classes, at most len(GLYPHS)

        pose_jitter (float) - pose perturbation scale

        seed (int)

    Returns:

        dataset (Dataset)

    """
    if size < 8:
        raise ValueError('Glyph rasters need size >= 8.')
    if not 1 <= n_classes <= len(GLYPHS):
        raise ValueError('n_classes must lie in [1, {:d}].'.format(len(GLYPHS)))
    if n < 1:
        raise ValueError('n must be at least 1.')
    if pose_jitter < 0:
        raise ValueError('pose_jitter must be non-negative.')

    templates = [render_glyph(name, size) for name in GLYPHS[:n_classes]]
    labels = np.arange(n) % n_classes
    noise = NoiseSource(seed).child('glyphs')
    images = np.empty((n, size, size))
    for i, label in enumerate(labels):
        if pose_jitter == 0:
            images[i] = templates[label]
            continue
        pose = noise.child(i).uniform(-1., 1., size=3) * pose_jitter
        images[i] = bilinear_affine_warp(templates[label], pose[0], 0.1 * pose[1:])

    metadata = dict(generator='glyphs', seed=int(seed), size=int(size),
                    n_classes=int(n_classes), pose_jitter=float(pose_jitter))
    return Dataset(images, labels, 'classification', metadata)
