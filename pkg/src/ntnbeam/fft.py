"""FFT backend selection.

The compiled ``_fftcore`` kernel is preferred; set ``NTNBEAM_PURE_PYTHON=1``
to force the numpy fallback (used by the benchmark and the parity tests).
"""

import os

import numpy as np

from ntnbeam import _fft_fallback

if os.environ.get("NTNBEAM_PURE_PYTHON"):
    _impl = _fft_fallback
    BACKEND = "python"
else:
    try:
        from ntnbeam import _fftcore as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fft_fallback
        BACKEND = "python"


def fft(x, axis=-1):
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    return np.moveaxis(_impl.fft_lastaxis(x, False), -1, axis)


def ifft(x, axis=-1):
    x = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    return np.moveaxis(_impl.fft_lastaxis(x, True), -1, axis)


def fft2(x):
    """Unnormalised 2-D DFT over the last two axes."""
    return fft(fft(x, -1), -2)


def ifft2(x):
    """Inverse of :func:`fft2` (carries the 1/(H*W) factor)."""
    return ifft(ifft(x, -1), -2)
