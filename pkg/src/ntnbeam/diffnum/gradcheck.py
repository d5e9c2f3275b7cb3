"""Central finite-difference gradient checks."""

from __future__ import annotations

import numpy as np

from ntnbeam.diffnum.core import Tape, Tensor


def numeric_grad(fn, arrays, index, h=1e-5):
    """Central difference of scalar ``fn(*arrays)`` w.r.t. ``arrays[index]``."""
    base = [np.array(a, dtype=float) for a in arrays]
    x = base[index]
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = float(np.real(fn(*base)))
        x[i] = old - h
        fm = float(np.real(fn(*base)))
        x[i] = old
        g[i] = (fp - fm) / (2.0 * h)
    return g


def analytic_grad(build, arrays):
    """Gradients of the scalar tensor returned by ``build(*tensors)``."""
    leaves = [Tensor(np.array(a, dtype=float), requires_grad=True) for a in arrays]
    with Tape() as tape:
        out = build(*leaves)
    tape.backward(out)
    return [np.zeros_like(t.data) if t.grad is None else t.grad for t in leaves]


def relative_error(a, b, floor=1e-8):
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), floor)
    return float(np.max(np.abs(a - b)) / scale)


def check_gradients(build, arrays, h=1e-5):
    """Max relative error between analytic and central-difference gradients
    over every input of ``build``."""
    def value(*xs):
        return build(*[Tensor(x) for x in xs]).data

    analytic = analytic_grad(build, arrays)
    errs = [relative_error(analytic[i], numeric_grad(value, arrays, i, h)) for i in range(len(arrays))]
    return max(errs)
