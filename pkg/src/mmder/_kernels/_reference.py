"""Pure numpy implementations of the hot kernels.

Every function takes C-contiguous 2D arrays (rows are the reduction axis)
and returns freshly allocated arrays of the same dtype. The compiled module
``_fast`` exposes the same names and signatures.
"""

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def softmax_rows(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_backward(y, gy):
    dot = (y * gy).sum(axis=1, keepdims=True)
    return y * (gy - dot)


def layer_norm(x, gamma, beta, eps):
    mean = x.mean(axis=1, keepdims=True)
    # one correction pass makes a constant row centre to exactly zero
    mean = mean + (x - mean).mean(axis=1, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = centered * rstd
    return xhat * gamma + beta, xhat, rstd[:, 0]


def layer_norm_backward(gy, xhat, rstd, gamma):
    gxhat = gy * gamma
    width = xhat.shape[1]
    mean_g = gxhat.sum(axis=1, keepdims=True) / width
    mean_gx = (gxhat * xhat).sum(axis=1, keepdims=True) / width
    gx = rstd[:, None] * (gxhat - mean_g - xhat * mean_gx)
    return gx, (gy * xhat).sum(axis=0), gy.sum(axis=0)


def gelu(x):
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_backward(x, gy):
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return gy * (cdf + x * pdf)


def bilinear_resize(img, out_h, out_w):
    """Corner-aligned bilinear resize of a 2D float64 grid."""
    in_h, in_w = img.shape
    ys = _source_coords(in_h, out_h)
    xs = _source_coords(in_w, out_w)
    y0 = np.minimum(np.floor(ys).astype(np.intp), in_h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.intp), in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    # a + (b - a) * w is exact when a == b, so flat regions stay flat
    top = img[y0][:, x0] + (img[y0][:, x1] - img[y0][:, x0]) * wx
    bottom = img[y1][:, x0] + (img[y1][:, x1] - img[y1][:, x0]) * wx
    return top + (bottom - top) * wy


def _source_coords(n_in, n_out):
    if n_out == 1 or n_in == 1:
        return np.zeros(n_out)
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))
