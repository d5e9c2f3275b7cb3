# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mixed-radix FFT kernel (batched along the last axis)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    MAX_FACTORS = 64
BLUESTEIN_THRESHOLD = 61


cdef int _factorize(Py_ssize_t n, int* factors):
    cdef int nf = 0
    cdef Py_ssize_t p = 2
    while p * p <= n:
        while n % p == 0:
            factors[nf] = <int>p
            nf += 1
            n //= p
        p += 1
    if n > 1:
        factors[nf] = <int>n
        nf += 1
    return nf


cdef void _rec(const double complex* x, double complex* out, Py_ssize_t n,
               Py_ssize_t stride, const int* factors, const double complex* table,
               Py_ssize_t total, double complex* scratch) nogil:
    # out[0:n] = DFT of x[0], x[stride], ..., x[(n-1)*stride]
    cdef int p = factors[0]
    cdef Py_ssize_t m = n // p
    cdef Py_ssize_t r, k, q, step_n = total // n, step_p = total // p
    cdef double complex acc
    if m == 1:
        for q in range(p):
            acc = 0
            for r in range(p):
                acc = acc + x[r * stride] * table[(r * q % p) * step_p]
            out[q] = acc
        return
    for r in range(p):
        _rec(x + r * stride, out + r * m, m, stride * p, factors + 1, table, total, scratch)
    for k in range(m):
        for r in range(p):
            scratch[r] = out[r * m + k] * table[(r * k * step_n) % total]
        for q in range(p):
            acc = 0
            for r in range(p):
                acc = acc + scratch[r] * table[(r * q % p) * step_p]
            out[q * m + k] = acc


cdef class _Plan:
    cdef Py_ssize_t n
    cdef int factors[MAX_FACTORS]
    cdef int maxp
    cdef double complex[::1] table

    def __cinit__(self, Py_ssize_t n):
        cdef Py_ssize_t j
        cdef int i, nf
        self.n = n
        nf = _factorize(n, self.factors)
        self.maxp = 1
        for i in range(nf):
            if self.factors[i] > self.maxp:
                self.maxp = self.factors[i]
        self.table = np.empty(n, dtype=np.complex128)
        for j in range(n):
            self.table[j] = cos(-2.0 * M_PI * j / n) + 1j * sin(-2.0 * M_PI * j / n)

    cdef void run(self, const double complex* x, double complex* out,
                  double complex* scratch) nogil:
        _rec(x, out, self.n, 1, self.factors, &self.table[0], self.n, scratch)


_plans = {}


cdef _Plan _get_plan(Py_ssize_t n):
    plan = _plans.get(n)
    if plan is None:
        plan = _Plan(n)
        _plans[n] = plan
    return <_Plan>plan


cdef cnp.ndarray _ct_rows(double complex[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], n = x.shape[1], i
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((rows, n), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef _Plan plan = _get_plan(n)
    cdef double complex* scratch = <double complex*>malloc(plan.maxp * sizeof(double complex))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(rows):
                plan.run(&x[i, 0], &ov[i, 0], scratch)
    finally:
        free(scratch)
    return out


_chirps = {}


def _bluestein_rows(x):
    n = x.shape[1]
    plan = _chirps.get(n)
    if plan is None:
        m = 1
        while m < 2 * n - 1:
            m *= 2
        k = np.arange(n)
        chirp = np.exp(-1j * np.pi * (k * k % (2 * n)) / n)
        b = np.zeros((1, m), dtype=np.complex128)
        b[0, :n] = np.conj(chirp)
        b[0, m - n + 1:] = np.conj(chirp[1:][::-1])
        plan = (m, chirp, _ct_rows(b)[0])
        _chirps[n] = plan
    m, chirp, fb = plan
    a = np.zeros((x.shape[0], m), dtype=np.complex128)
    a[:, :n] = x * chirp
    spec = _ct_rows(a) * fb
    conv = np.conj(_ct_rows(np.ascontiguousarray(np.conj(spec)))) / m
    return conv[:, :n] * chirp


def _max_factor(Py_ssize_t n):
    cdef int factors[MAX_FACTORS]
    cdef int nf = _factorize(n, factors), i, best = 1
    for i in range(nf):
        if factors[i] > best:
            best = factors[i]
    return best


def fft_lastaxis(x, bint inverse=False):
    """DFT along the last axis; ``inverse`` applies the 1/n-normalised inverse."""
    x = np.asarray(x, dtype=np.complex128)
    shape = x.shape
    n = shape[len(shape) - 1]
    if n == 0 or x.size == 0:
        return x.copy()
    flat = np.ascontiguousarray(x.reshape(-1, n))
    if inverse:
        flat = np.ascontiguousarray(np.conj(flat))
    if n == 1:
        out = flat.copy()
    elif _max_factor(n) > BLUESTEIN_THRESHOLD:
        out = _bluestein_rows(flat)
    else:
        out = _ct_rows(flat)
    if inverse:
        out = np.conj(out) / n
    return out.reshape(shape)
