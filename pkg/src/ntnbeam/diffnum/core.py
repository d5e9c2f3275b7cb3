"""Tensors, the recording tape and elementwise/shape primitives.

Gradients of complex tensors follow the convention
``grad = dL/dRe + 1j * dL/dIm`` for a real scalar loss ``L``, so the pullback
of a holomorphic map ``y = f(z)`` is ``conj(f'(z)) * grad_y``.
"""

from __future__ import annotations

import threading

import numpy as np

_local = threading.local()


def _stack():
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape():
    tapes = _stack()
    return tapes[-1] if tapes else None


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_derived")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.asarray(data)
        if not np.iscomplexobj(arr):
            arr = arr.astype(np.float64, copy=False)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._derived = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    def item(self):
        return self.data.item()

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.data.dtype})"

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
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("out", "inputs", "pullback")

    def __init__(self, out, inputs, pullback):
        self.out = out
        self.inputs = inputs
        self.pullback = pullback


class Tape:
    """Ordered record of primitive applications.

    Use as a context manager; primitives evaluated inside it on tensors that
    require gradients are appended, and :meth:`backward` replays them in
    reverse order, accumulating into the leaves' ``.grad``.
    """

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        _stack().pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def backward(self, loss: Tensor, seed=None):
        if seed is None:
            if loss.data.size != 1:
                raise ValueError("backward needs a scalar loss or an explicit seed")
            seed = np.ones_like(loss.data, dtype=float)
        grads = {id(loss): np.asarray(seed)}
        if not loss._derived and loss.requires_grad:
            _accumulate_leaf(loss, grads.pop(id(loss)))
        for node in reversed(self.nodes):
            g = grads.pop(id(node.out), None)
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.pullback(g)):
                if gi is None or not inp.requires_grad:
                    continue
                gi = _fit(gi, inp.data)
                if inp._derived:
                    key = id(inp)
                    grads[key] = grads[key] + gi if key in grads else gi
                else:
                    _accumulate_leaf(inp, gi)


def _accumulate_leaf(t, g):
    t.grad = g.copy() if t.grad is None else t.grad + g


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _fit(g, like):
    g = np.asarray(g)
    if g.shape != like.shape:
        g = _unbroadcast(g, like.shape)
    if np.iscomplexobj(g) and not np.iscomplexobj(like):
        g = g.real
    return g


def record(data, inputs, pullback):
    """Wrap ``data`` as an op output and register its pullback on the tape."""
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._derived = True
        tape.nodes.append(_Node(out, tuple(inputs), pullback))
    return out


# -- elementwise --------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return record(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return record(a.data - b.data, (a, b), lambda g: (g, -g))


def neg(a):
    a = as_tensor(a)
    return record(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return record(a.data * b.data, (a, b), lambda g: (g * np.conj(b.data), g * np.conj(a.data)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    y = a.data / b.data

    def pullback(g):
        gb = np.conj(b.data)
        return g / gb, -g * np.conj(y) / gb

    return record(y, (a, b), pullback)


def exp(a):
    a = as_tensor(a)
    y = np.exp(a.data)
    return record(y, (a,), lambda g: (g * np.conj(y),))


def log(a):
    a = as_tensor(a)
    return record(np.log(a.data), (a,), lambda g: (g / np.conj(a.data),))


def log2(a):
    a = as_tensor(a)
    return record(np.log2(a.data), (a,), lambda g: (g / (np.conj(a.data) * np.log(2.0)),))


def sqrt(a):
    a = as_tensor(a)
    y = np.sqrt(a.data)
    return record(y, (a,), lambda g: (g / (2.0 * np.conj(y)),))


def abs2(a):
    """Squared modulus; real output."""
    a = as_tensor(a)
    return record((a.data * np.conj(a.data)).real, (a,), lambda g: (2.0 * g * a.data,))


def real(a):
    a = as_tensor(a)
    return record(np.real(a.data).copy(), (a,), lambda g: (g + 0j,))


def imag(a):
    a = as_tensor(a)
    return record(np.imag(a.data).copy(), (a,), lambda g: (1j * g,))


def conj(a):
    a = as_tensor(a)
    return record(np.conj(a.data), (a,), lambda g: (np.conj(g),))


def make_complex(re, im):
    re, im = as_tensor(re), as_tensor(im)
    return record(re.data + 1j * im.data, (re, im), lambda g: (np.real(g), np.imag(g)))


def tanh(a):
    a = as_tensor(a)
    y = np.tanh(a.data)
    return record(y, (a,), lambda g: (g * np.conj(1.0 - y * y),))


def clip(a, lo, hi):
    a = as_tensor(a)
    mask = (a.data >= lo) & (a.data <= hi)
    return record(np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


# -- reductions and shapes ----------------------------------------------------


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    y = a.data.sum(axis=axis, keepdims=keepdims)

    def pullback(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape),)

    return record(y, (a,), pullback)


def mean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod([a.shape[ax] for ax in np.atleast_1d(axis)])
    return tsum(a, axis, keepdims) * (1.0 / n)


def reshape(a, shape):
    a = as_tensor(a)
    return record(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def swapaxes(a, ax1, ax2):
    a = as_tensor(a)
    return record(np.swapaxes(a.data, ax1, ax2), (a,), lambda g: (np.swapaxes(g, ax1, ax2),))


def matmul(a, b):
    """Batched matrix product over the last two axes (no conjugation)."""
    a, b = as_tensor(a), as_tensor(b)

    def pullback(g):
        ga = g @ np.conj(np.swapaxes(b.data, -1, -2))
        gb = np.conj(np.swapaxes(a.data, -1, -2)) @ g
        return ga, gb

    return record(a.data @ b.data, (a, b), pullback)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return record(np.concatenate([t.data for t in tensors], axis=axis), tensors, lambda g: tuple(np.split(g, sizes, axis=axis)))


def take(a, index, axis):
    """Select ``index`` (int array) along ``axis``."""
    a = as_tensor(a)
    index = np.asarray(index)

    def pullback(g):
        out = np.zeros(a.shape, dtype=g.dtype)
        np.add.at(np.moveaxis(out, axis, 0), index, np.moveaxis(g, axis, 0))
        return (out,)

    return record(np.take(a.data, index, axis=axis), (a,), pullback)
