# Compiled row kernels. Same contract as _reference.py; row reductions are
# accumulated in double and run serially so results are reproducible.
import numpy as np

from libc.math cimport erf, exp, floor, sqrt

ctypedef fused real:
    float
    double

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327


def _dtype_of(real[:, ::1] x):
    if real is float:
        return np.float32
    return np.float64


def softmax_rows(real[:, ::1] x):
    # shift and normalise here; the exponentials go through numpy's
    # vectorised ufunc, which a scalar libm loop cannot match
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], i, j
    out_arr = np.empty((m, n), dtype=_dtype_of(x))
    cdef real[:, ::1] out = out_arr
    cdef real mx
    cdef double total
    for i in range(m):
        mx = x[i, 0]
        for j in range(1, n):
            if x[i, j] > mx:
                mx = x[i, j]
        for j in range(n):
            out[i, j] = x[i, j] - mx
    np.exp(out_arr, out=out_arr)
    for i in range(m):
        total = 0.0
        for j in range(n):
            total += out[i, j]
        for j in range(n):
            out[i, j] = <real>(out[i, j] / total)
    return out_arr


def softmax_rows_backward(real[:, ::1] y, real[:, ::1] gy):
    cdef Py_ssize_t m = y.shape[0], n = y.shape[1], i, j
    out_arr = np.empty((m, n), dtype=_dtype_of(y))
    cdef real[:, ::1] out = out_arr
    cdef double dot
    for i in range(m):
        dot = 0.0
        for j in range(n):
            dot += y[i, j] * gy[i, j]
        for j in range(n):
            out[i, j] = <real>(y[i, j] * (gy[i, j] - dot))
    return out_arr


def layer_norm(real[:, ::1] x, real[::1] gamma, real[::1] beta, double eps):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], i, j
    dtype = _dtype_of(x)
    y_arr = np.empty((m, n), dtype=dtype)
    xhat_arr = np.empty((m, n), dtype=dtype)
    rstd_arr = np.empty(m, dtype=dtype)
    cdef real[:, ::1] y = y_arr
    cdef real[:, ::1] xhat = xhat_arr
    cdef real[::1] rstd = rstd_arr
    cdef double mean, var, d, r
    for i in range(m):
        mean = 0.0
        for j in range(n):
            mean += x[i, j]
        mean /= n
        # one correction pass makes a constant row centre to exactly zero
        d = 0.0
        for j in range(n):
            d += x[i, j] - mean
        mean += d / n
        var = 0.0
        for j in range(n):
            d = x[i, j] - mean
            var += d * d
        var /= n
        r = 1.0 / sqrt(var + eps)
        rstd[i] = <real>r
        for j in range(n):
            d = (x[i, j] - mean) * r
            xhat[i, j] = <real>d
            y[i, j] = <real>(d * gamma[j] + beta[j])
    return y_arr, xhat_arr, rstd_arr


def layer_norm_backward(real[:, ::1] gy, real[:, ::1] xhat, real[::1] rstd,
                        real[::1] gamma):
    cdef Py_ssize_t m = gy.shape[0], n = gy.shape[1], i, j
    dtype = _dtype_of(gy)
    gx_arr = np.empty((m, n), dtype=dtype)
    cdef real[:, ::1] gx = gx_arr
    acc_g = np.zeros(n, dtype=np.float64)
    acc_b = np.zeros(n, dtype=np.float64)
    cdef double[::1] gg = acc_g
    cdef double[::1] gb = acc_b
    cdef double mean_g, mean_gx, g
    for i in range(m):
        mean_g = 0.0
        mean_gx = 0.0
        for j in range(n):
            g = gy[i, j] * gamma[j]
            mean_g += g
            mean_gx += g * xhat[i, j]
            gg[j] += gy[i, j] * xhat[i, j]
            gb[j] += gy[i, j]
        mean_g /= n
        mean_gx /= n
        for j in range(n):
            g = gy[i, j] * gamma[j]
            gx[i, j] = <real>(rstd[i] * (g - mean_g - xhat[i, j] * mean_gx))
    return gx_arr, acc_g.astype(dtype), acc_b.astype(dtype)


def gelu(real[:, ::1] x):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], i, j
    out_arr = np.empty((m, n), dtype=_dtype_of(x))
    cdef real[:, ::1] out = out_arr
    cdef double v
    for i in range(m):
        for j in range(n):
            v = x[i, j]
            out[i, j] = <real>(0.5 * v * (1.0 + erf(v * INV_SQRT2)))
    return out_arr


def gelu_backward(real[:, ::1] x, real[:, ::1] gy):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], i, j
    out_arr = np.empty((m, n), dtype=_dtype_of(x))
    cdef real[:, ::1] out = out_arr
    cdef double v, cdf, pdf
    for i in range(m):
        for j in range(n):
            v = x[i, j]
            cdf = 0.5 * (1.0 + erf(v * INV_SQRT2))
            pdf = INV_SQRT_2PI * exp(-0.5 * v * v)
            out[i, j] = <real>(gy[i, j] * (cdf + v * pdf))
    return out_arr


def bilinear_resize(double[:, ::1] img, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t in_h = img.shape[0], in_w = img.shape[1], i, j
    cdef Py_ssize_t y0, y1, x0, x1
    cdef double sy = 0.0, sx = 0.0, fy, fx, wy, wx, top, bottom
    if out_h > 1 and in_h > 1:
        sy = (in_h - 1) / <double>(out_h - 1)
    if out_w > 1 and in_w > 1:
        sx = (in_w - 1) / <double>(out_w - 1)
    out_arr = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for i in range(out_h):
        fy = i * sy
        y0 = <Py_ssize_t>floor(fy)
        if y0 > in_h - 1:
            y0 = in_h - 1
        y1 = y0 + 1 if y0 + 1 < in_h else in_h - 1
        wy = fy - y0
        for j in range(out_w):
            fx = j * sx
            x0 = <Py_ssize_t>floor(fx)
            if x0 > in_w - 1:
                x0 = in_w - 1
            x1 = x0 + 1 if x0 + 1 < in_w else in_w - 1
            wx = fx - x0
            top = img[y0, x0] + (img[y0, x1] - img[y0, x0]) * wx
            bottom = img[y1, x0] + (img[y1, x1] - img[y1, x0]) * wx
            out[i, j] = top + (bottom - top) * wy
    return out_arr
