"""Dense tensors with a reverse-mode gradient tape.

Each op returns a new :class:`Tensor` that remembers its parents and a
closure mapping the output gradient to parent gradients. Ops never mutate
their inputs. :func:`backward` walks the recorded graph once in reverse
topological order.
"""

from contextlib import contextmanager

import numpy as np

from .. import _kernels
from ..errors import ContractError, GradientError, ShapeError

_DEFAULT_DTYPE = np.dtype(np.float32)
_GRAD_ENABLED = True


def get_default_dtype():
    return _DEFAULT_DTYPE


def set_default_dtype(dtype):
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ContractError(f"default dtype must be float32 or float64, got {dtype}")
    _DEFAULT_DTYPE = dtype


@contextmanager
def default_dtype(dtype):
    """Temporarily switch the width used for new tensors."""
    previous = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


@contextmanager
def no_grad():
    """Record no graph inside the block (evaluation)."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward", "_consumed")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        arr = np.array(data, dtype=dtype or _DEFAULT_DTYPE)
        if any(d <= 0 for d in arr.shape):
            raise ShapeError(f"tensor dimensions must be positive, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._parents = ()
        self._backward = None
        self._consumed = False

    @classmethod
    def _result(cls, data, parents, backward):
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.name = None
        out._consumed = False
        out.requires_grad = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.data, dtype=self.data.dtype)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype}{flag})"

    def backward(self, store=True):
        return backward(self, store=store)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("division is only defined by a constant")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


def as_tensor(value, like=None):
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _unbroadcast(grad, shape):
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a, b):
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "add")

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._result(a.data + b.data, (a, b), grad_fn)


def sub(a, b):
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "sub")

    def grad_fn(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return Tensor._result(a.data - b.data, (a, b), grad_fn)


def mul(a, b):
    a, b = _pair(a, b)
    _broadcast_shape(a, b, "mul")

    def grad_fn(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._result(a.data * b.data, (a, b), grad_fn)


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def matmul(a, b):
    """Matrix product over the last two axes, batch axes broadcast."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError(f"matmul: batch axes of {a.shape} and {b.shape} do not broadcast") from None

    def grad_fn(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        if b.requires_grad:
            if b.ndim == 2:
                k, n = b.shape
                gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
            else:
                gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return Tensor._result(out, (a, b), grad_fn)


def reshape(a, shape):
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {a.shape} as {tuple(shape)}") from None
    return Tensor._result(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes=None):
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return Tensor._result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def sum(a, axis=None, keepdims=False):
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def grad_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._result(np.asarray(out), (a,), grad_fn)


def mean(a, axis=None, keepdims=False):
    if axis is None:
        count = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def softmax_rows(a):
    """Softmax along the last axis, stabilised by the row maximum."""
    a = as_tensor(a)
    y = _kernels.softmax_rows(a.data)
    return Tensor._result(y, (a,), lambda g: (_kernels.softmax_rows_backward(y, g),))


def layer_norm(x, gamma, beta, eps=1e-6):
    width = x.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise ShapeError(
            f"layer_norm: affine shapes {gamma.shape}, {beta.shape} do not match width {width}"
        )
    y, xhat, rstd = _kernels.layer_norm(x.data, gamma.data, beta.data, eps)

    def grad_fn(g):
        gx, gg, gb = _kernels.layer_norm_backward(g, xhat, rstd, gamma.data)
        return gx, gg, gb

    return Tensor._result(y, (x, gamma, beta), grad_fn)


def gelu(x):
    return Tensor._result(_kernels.gelu(x.data), (x,), lambda g: (_kernels.gelu_backward(x.data, g),))


def cross_entropy(logits, labels):
    """Mean of ``-log softmax(logits)[label]`` over the leading axis.

    ``logits`` is ``(K,)`` with an integer label, or ``(B, K)`` with ``B``
    labels.
    """
    single = logits.ndim == 1
    z = logits.data[None, :] if single else logits.data
    labels = np.atleast_1d(np.asarray(labels))
    num_classes = z.shape[-1]
    if z.ndim != 2 or labels.shape != (z.shape[0],):
        raise ShapeError(f"cross_entropy: logits {logits.shape} vs labels {labels.shape}")
    if labels.dtype.kind not in "iu" or labels.min() < 0 or labels.max() >= num_classes:
        raise ContractError(f"cross_entropy: labels {labels.tolist()} outside [0, {num_classes})")
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_norm
    rows = np.arange(z.shape[0])
    loss = -log_probs[rows, labels].mean()

    def grad_fn(g):
        probs = np.exp(log_probs)
        probs[rows, labels] -= 1.0
        grad = probs * (g / z.shape[0])
        return (grad[0] if single else grad,)

    return Tensor._result(np.asarray(loss, dtype=z.dtype), (logits,), grad_fn)


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss, store=True):
    """Propagate gradients from a scalar ``loss`` to every leaf that requires them.

    Returns a dict mapping leaf tensors to gradient arrays. With ``store``
    the gradients are also written to ``leaf.grad``; a leaf whose gradient
    was not reset (``zero_grad``) is an error, as is a second call on the
    same loss.
    """
    if loss.size != 1:
        raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._consumed:
        raise GradientError("backward was already called on this loss")
    if not loss.requires_grad:
        raise GradientError("loss does not depend on any tensor that requires grad")

    grads = {id(loss): np.ones_like(loss.data)}
    leaves = {}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if not node._parents:
            leaves[node] = g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    loss._consumed = True

    if store:
        stale = [leaf for leaf in leaves if leaf.grad is not None]
        if stale:
            names = ", ".join(leaf.name or repr(leaf) for leaf in stale[:3])
            raise GradientError(f"gradients were not reset before backward: {names}")
        for leaf, g in leaves.items():
            leaf.grad = g
    return leaves
