"""Hot row kernels with a compiled core and a numpy fallback.

The compiled extension ``_fast`` is used when it was built; otherwise, or
when ``MMDER_PURE_PYTHON=1`` is set, the numpy implementations in
``_reference`` are used. :func:`use_backend` switches at runtime (tests and
the benchmark rely on it).

All public wrappers accept arrays of any rank and operate along the last
axis.
"""

import os

import numpy as np

from . import _reference

try:
    from . import _fast
except ImportError:  # extension not built
    _fast = None

_BACKENDS = {"python": _reference}
if _fast is not None:
    _BACKENDS["compiled"] = _fast

_impl = _reference
BACKEND = "python"


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _impl, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available_backends()}")
    previous = BACKEND
    _impl = _BACKENDS[name]
    BACKEND = name
    return previous


if _fast is not None and os.environ.get("MMDER_PURE_PYTHON") != "1":
    use_backend("compiled")


def _rows(x):
    return np.ascontiguousarray(x.reshape(-1, x.shape[-1]))


def softmax_rows(x):
    return _impl.softmax_rows(_rows(x)).reshape(x.shape)


def softmax_rows_backward(y, gy):
    return _impl.softmax_rows_backward(_rows(y), _rows(gy)).reshape(y.shape)


def layer_norm(x, gamma, beta, eps):
    """Returns ``(y, xhat, rstd)``; ``rstd`` has one entry per row."""
    gamma = np.ascontiguousarray(gamma, dtype=x.dtype)
    beta = np.ascontiguousarray(beta, dtype=x.dtype)
    y, xhat, rstd = _impl.layer_norm(_rows(x), gamma, beta, float(eps))
    return y.reshape(x.shape), xhat.reshape(x.shape), rstd


def layer_norm_backward(gy, xhat, rstd, gamma):
    """Returns ``(gx, ggamma, gbeta)``."""
    gamma = np.ascontiguousarray(gamma, dtype=gy.dtype)
    gx, gg, gb = _impl.layer_norm_backward(
        _rows(gy), _rows(xhat), np.ascontiguousarray(rstd), gamma
    )
    return gx.reshape(gy.shape), gg, gb


def gelu(x):
    return _impl.gelu(_rows(x)).reshape(x.shape)


def gelu_backward(x, gy):
    return _impl.gelu_backward(_rows(x), _rows(gy)).reshape(x.shape)


def bilinear_resize(img, out_h, out_w):
    """Corner-aligned bilinear resize of a 2D grid (computed in float64)."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"bilinear_resize needs a non-empty 2D grid, got shape {img.shape}")
    return _impl.bilinear_resize(img, int(out_h), int(out_w))
