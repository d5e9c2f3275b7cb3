"""Pure-numpy mixed-radix FFT along the last axis.

Used when the compiled ``_fftcore`` extension is unavailable.  Lengths with
only small prime factors go through a recursive Cooley-Tukey split; lengths
carrying a prime factor above ``BLUESTEIN_THRESHOLD`` are routed through
Bluestein's chirp-z algorithm on a power-of-two grid.
"""

from functools import lru_cache

import numpy as np

BLUESTEIN_THRESHOLD = 61


def factorize(n):
    factors = []
    p = 2
    while p * p <= n:
        while n % p == 0:
            factors.append(p)
            n //= p
        p += 1
    if n > 1:
        factors.append(n)
    return factors


@lru_cache(maxsize=256)
def _dft_matrix(p):
    k = np.arange(p)
    return np.exp(-2j * np.pi * np.outer(k, k) / p)


@lru_cache(maxsize=256)
def _twiddles(p, m):
    r = np.arange(p)[:, None]
    k = np.arange(m)[None, :]
    return np.exp(-2j * np.pi * r * k / (p * m))


def _ct(x):
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    p = factorize(n)[0]
    if p == n:
        return x @ _dft_matrix(p)
    m = n // p
    # sub[..., r, k] = DFT_m of x[..., r::p]
    sub = _ct(np.swapaxes(x.reshape(x.shape[:-1] + (m, p)), -1, -2))
    sub = sub * _twiddles(p, m)
    # out[..., q, k] = sum_r W_p^{rq} sub[..., r, k]
    out = np.einsum("rq,...rk->...qk", _dft_matrix(p), sub)
    return out.reshape(x.shape)


@lru_cache(maxsize=64)
def _bluestein_plan(n):
    m = 1
    while m < 2 * n - 1:
        m *= 2
    k = np.arange(n)
    chirp = np.exp(-1j * np.pi * (k * k % (2 * n)) / n)
    b = np.zeros(m, dtype=complex)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])
    return m, chirp, _ct(b)


def _bluestein(x):
    n = x.shape[-1]
    m, chirp, fb = _bluestein_plan(n)
    a = np.zeros(x.shape[:-1] + (m,), dtype=complex)
    a[..., :n] = x * chirp
    conv = _inverse(_ct(a) * fb)
    return conv[..., :n] * chirp


def _inverse(x):
    return np.conj(_ct(np.conj(x))) / x.shape[-1]


def fft_lastaxis(x, inverse=False):
    """DFT along the last axis; ``inverse`` applies the 1/n-normalised inverse."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n <= 1:
        return x.copy()
    if inverse:
        return np.conj(fft_lastaxis(np.conj(x))) / n
    if max(factorize(n)) > BLUESTEIN_THRESHOLD:
        return _bluestein(x)
    return _ct(x)
