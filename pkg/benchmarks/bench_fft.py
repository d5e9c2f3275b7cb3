"""Compare the compiled FFT core with the pure-Python fallback.

Run with ``python benchmarks/bench_fft.py``.
"""

from __future__ import annotations

import timeit

import numpy as np

from ntnbeam import _fft_fallback
from ntnbeam import fft as fft_mod

SHAPES = [(2, 4), (4, 8), (16, 64), (32, 64), (8, 60)]


def _fft2(impl):
    def run(x):
        y = impl.fft_lastaxis(x, False)
        return impl.fft_lastaxis(np.ascontiguousarray(y.T), False).T

    return run


def _time(fn, x, repeat=5):
    n, _ = timeit.Timer(lambda: fn(x)).autorange()
    return min(timeit.repeat(lambda: fn(x), number=n, repeat=repeat)) / n


def main():
    try:
        from ntnbeam import _fftcore
    except ImportError:
        _fftcore = None
    rng = np.random.default_rng(0)
    print(f"active backend: {fft_mod.BACKEND}")
    print(f"{'shape':>10} {'fallback_us':>12} {'compiled_us':>12} {'speedup':>8} {'max_abs_diff':>13}")
    for shape in SHAPES:
        x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        py = _fft2(_fft_fallback)
        t_py = _time(py, x)
        if _fftcore is None:
            print(f"{str(shape):>10} {t_py * 1e6:12.1f} {'n/a':>12}")
            continue
        c = _fft2(_fftcore)
        t_c = _time(c, x)
        diff = np.max(np.abs(c(x) - py(x)))
        print(f"{str(shape):>10} {t_py * 1e6:12.1f} {t_c * 1e6:12.1f} {t_py / t_c:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
