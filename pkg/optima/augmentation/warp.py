"""
Differentiable rotation + translation of rasters by bilinear resampling.

Convention: pixel (r, c) has coordinates (x=c, y=r). The image is rotated by omega about its geometric centre ((H-1)/2, (W-1)/2) and then shifted by (t_x * W, t_y * H) pixels. Each output pixel reads the source location given by the inverse map; reads outside the raster return 0.
"""

import numpy as np


def _source_coordinates(shape, omega, tx, ty):
    """
    Returns source coordinates for each output pixel.

    Returns:

        src_x, src_y (np.ndarray[float]) - source column / row, shape (H, W)

        u, v (np.ndarray[float]) - centred, untranslated output offsets

    """
    h, w = shape
    cy, cx = (h - 1) / 2, (w - 1) / 2
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64),
                             np.arange(w, dtype=np.float64), indexing='ij')
    u = cols - cx - tx * w
    v = rows - cy - ty * h
    cos, sin = np.cos(omega), np.sin(omega)
    src_x = cos * u + sin * v + cx
    src_y = -sin * u + cos * v + cy
    return src_x, src_y, u, v


def _gather(image, rows, cols):
    """ Reads image[rows, cols] with zero padding outside the raster. """
    h, w = image.shape
    inside = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
    values = np.zeros(rows.shape)
    values[inside] = image[rows[inside], cols[inside]]
    return values


def _corners(image, src_x, src_y):
    """ Returns interpolation fractions and the four neighbouring values. """
    x0 = np.floor(src_x).astype(int)
    y0 = np.floor(src_y).astype(int)
    fx = src_x - x0
    fy = src_y - y0
    i00 = _gather(image, y0, x0)
    i01 = _gather(image, y0, x0 + 1)
    i10 = _gather(image, y0 + 1, x0)
    i11 = _gather(image, y0 + 1, x0 + 1)
    return fx, fy, i00, i01, i10, i11


def bilinear_affine_warp(image, omega, t):
    """
    Rotate <image> about its centre by <omega> then translate by <t>.

    Args:

        image (np.ndarray[float]) - H x W raster, H, W >= 2

        omega (float) - rotation in radians

        t (tuple) - (t_x, t_y) as fractions of width / height

    Returns:

        warped (np.ndarray[float]) - H x W raster

    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 2:
        raise ValueError('Warp requires an H x W raster with H, W >= 2.')
    src_x, src_y, _, _ = _source_coordinates(image.shape, omega, *t)
    fx, fy, i00, i01, i10, i11 = _corners(image, src_x, src_y)
    top = (1 - fx) * i00 + fx * i01
    bottom = (1 - fx) * i10 + fx * i11
    return (1 - fy) * top + fy * bottom


def warp_jacobian(image, omega, t):
    """
    Warped raster and its derivatives with respect to (omega, t_x, t_y).

    Args:

        image (np.ndarray[float]) - H x W raster

        omega (float) - rotation in radians

        t (tuple) - (t_x, t_y) fractions

    Returns:

        warped (np.ndarray[float]) - H x W raster

        jacobian (np.ndarray[float]) - 3 x H x W derivatives (omega, t_x, t_y)

    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    src_x, src_y, u, v = _source_coordinates(image.shape, omega, *t)
    fx, fy, i00, i01, i10, i11 = _corners(image, src_x, src_y)
    top = (1 - fx) * i00 + fx * i01
    bottom = (1 - fx) * i10 + fx * i11
    warped = (1 - fy) * top + fy * bottom

    # derivatives of the interpolant with respect to source coordinates
    d_src_x = (1 - fy) * (i01 - i00) + fy * (i11 - i10)
    d_src_y = bottom - top

    cos, sin = np.cos(omega), np.sin(omega)
    d_omega = d_src_x * (-sin * u + cos * v) + d_src_y * (-cos * u - sin * v)
    d_tx = (d_src_x * -cos + d_src_y * sin) * w
    d_ty = (d_src_x * -sin + d_src_y * -cos) * h
    return warped, np.stack((d_omega, d_tx, d_ty))
