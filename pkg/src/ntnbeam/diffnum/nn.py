"""Layer primitives: dense, activations, convolution, Fourier transforms,
truncated spectral multiplication and reparameterised Gaussian sampling."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ntnbeam import fft as _fft
from ntnbeam.diffnum.core import Tensor, as_tensor, record

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def dense(x, weight, bias=None):
    """Affine map ``x @ weight.T + bias`` over the last axis of ``x``."""
    x, weight = as_tensor(x), as_tensor(weight)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ValueError(f"dense: input {x.shape} does not match weight {weight.shape}")
    inputs = [x, weight]
    y = x.data @ weight.data.T
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ValueError(f"dense: bias {bias.shape} does not match weight {weight.shape}")
        y = y + bias.data
        inputs.append(bias)

    def pullback(g):
        gx = g @ weight.data
        gw = g.reshape(-1, g.shape[-1]).T @ x.data.reshape(-1, x.shape[-1])
        if bias is None:
            return gx, gw
        return gx, gw, g.reshape(-1, g.shape[-1]).sum(axis=0)

    return record(y, inputs, pullback)


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0
    return record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def softmax(x, axis=-1):
    x = as_tensor(x)
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def pullback(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return record(s, (x,), pullback)


def conv2d(x, kernel, bias=None):
    """Stride-1 'same' cross-correlation with zero padding.

    ``x`` is ``[batch, C_in, H, W]`` and ``kernel`` ``[C_out, C_in, kh, kw]``
    with odd kernel sides.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    c_out, c_in, kh, kw = kernel.shape
    if x.ndim != 4 or x.shape[1] != c_in or kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"conv2d: input {x.shape} incompatible with kernel {kernel.shape}")
    ph, pw = kh // 2, kw // 2
    H, W = x.shape[2:]
    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    patches = sliding_window_view(xp, (kh, kw), axis=(2, 3))  # [b, c, H, W, kh, kw]
    y = np.einsum("bchwij,ocij->bohw", patches, kernel.data, optimize=True)
    inputs = [x, kernel]
    if bias is not None:
        bias = as_tensor(bias)
        y = y + bias.data[None, :, None, None]
        inputs.append(bias)

    def pullback(g):
        gk = np.einsum("bohw,bchwij->ocij", g, patches, optimize=True)
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + H, j:j + W] += np.einsum("bohw,oc->bchw", g, kernel.data[:, :, i, j])
        gx = gxp[:, :, ph:ph + H, pw:pw + W]
        if bias is None:
            return gx, gk
        return gx, gk, g.sum(axis=(0, 2, 3))

    return record(y, inputs, pullback)


def fft2(x):
    """Unnormalised 2-D DFT over the last two axes."""
    x = as_tensor(x)
    hw = x.shape[-1] * x.shape[-2]
    return record(_fft.fft2(x.data), (x,), lambda g: (hw * _fft.ifft2(g),))


def ifft2(x):
    """Inverse 2-D DFT (1/(H*W) normalisation) over the last two axes."""
    x = as_tensor(x)
    hw = x.shape[-1] * x.shape[-2]
    return record(_fft.ifft2(x.data), (x,), lambda g: (_fft.fft2(g) / hw,))


@lru_cache(maxsize=64)
def _partner_modes(H, W, m_h, m_w):
    """Conjugate partners of the retained block that fall outside it."""
    kh, kw = np.meshgrid(np.arange(m_h), np.arange(m_w), indexing="ij")
    pr, pc = (-kh) % H, (-kw) % W
    outside = ~((pr < m_h) & (pc < m_w))
    return kh[outside], kw[outside], pr[outside], pc[outside]


def spectral_multiply(X, Z):
    """Filter the low-frequency corner block of ``X`` with ``Z``.

    ``X`` is ``[..., C_in, H, W]`` (complex spectrum), ``Z`` is
    ``[C_out, C_in, m_h, m_w]``.  Modes ``(k_h, k_w)`` with ``k_h < m_h`` and
    ``k_w < m_w`` are contracted over input channels with ``Z``; their
    conjugate partners ``(-k_h, -k_w)`` receive ``conj(Z)``, so a Hermitian
    input spectrum stays Hermitian whenever ``Z`` is real on self-conjugate
    modes such as DC.  All other modes are zeroed.
    """
    X, Z = as_tensor(X), as_tensor(Z)
    c_out, c_in, m_h, m_w = Z.shape
    H, W = X.shape[-2:]
    if X.shape[-3] != c_in:
        raise ValueError(f"spectral_multiply: {X.shape[-3]} input channels, filter expects {c_in}")
    if m_h > H or m_w > W:
        raise ValueError(f"spectral_multiply: modes ({m_h}, {m_w}) exceed spatial size ({H}, {W})")
    kh, kw, pr, pc = _partner_modes(H, W, m_h, m_w)
    xd, zd = X.data, Z.data
    Y = np.zeros(xd.shape[:-3] + (c_out, H, W), dtype=complex)
    Y[..., :m_h, :m_w] = np.einsum("ochw,...chw->...ohw", zd, xd[..., :m_h, :m_w])
    zp = zd[:, :, kh, kw]  # [o, c, n]
    if kh.size:
        Y[..., pr, pc] = np.einsum("ocn,...cn->...on", np.conj(zp), xd[..., pr, pc])

    def pullback(g):
        gX = np.zeros(xd.shape, dtype=complex)
        gX[..., :m_h, :m_w] = np.einsum("ochw,...ohw->...chw", np.conj(zd), g[..., :m_h, :m_w])
        lead = "".join(chr(ord("a") + i) for i in range(xd.ndim - 3))
        gZ = np.einsum(f"{lead}chw,{lead}ohw->ochw", np.conj(xd[..., :m_h, :m_w]), g[..., :m_h, :m_w])
        if kh.size:
            gp = g[..., pr, pc]
            gX[..., pr, pc] = np.einsum("ocn,...on->...cn", zp, gp)
            np.add.at(gZ, (slice(None), slice(None), kh, kw),
                      np.einsum(f"{lead}on,{lead}cn->ocn", np.conj(gp), xd[..., pr, pc]))
        return gX, gZ

    return record(Y, (X, Z), pullback)


def gaussian_sample(mu, log_std, eps, batch_dims=0):
    """Reparameterised draw ``mu + exp(log_std) * eps`` and its log-density.

    ``log_std`` broadcasts against ``mu`` (e.g. one scale per row).  The
    log-density is summed over every axis after the first ``batch_dims``.
    """
    mu, log_std = as_tensor(mu), as_tensor(log_std)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != mu.shape:
        raise ValueError(f"gaussian_sample: eps {eps.shape} does not match mu {mu.shape}")
    std = np.exp(log_std.data)
    action = record(mu.data + std * eps, (mu, log_std),
                    lambda g: (g, g * std * eps))
    ls_full = np.broadcast_to(log_std.data, mu.shape)
    axes = tuple(range(batch_dims, mu.ndim))
    lp = (-LOG_SQRT_2PI - ls_full - 0.5 * eps**2).sum(axis=axes)

    def lp_pullback(g):
        g = np.asarray(g).reshape(g.shape + (1,) * len(axes))
        return (-np.broadcast_to(g, mu.shape),)

    log_prob = record(lp, (log_std,), lp_pullback)
    return action, log_prob
