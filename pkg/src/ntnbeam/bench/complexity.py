"""Operation-count estimates for the learned and classical precoders."""

from __future__ import annotations

import math

# Full-pipeline totals quoted for the HAPS actor at U=16, N=64; kept for
# reference only since their term-by-term composition is not recoverable.
REFERENCE_FNO_TOTAL = 5260542
REFERENCE_CNN_TOTAL = 6808832


def _positive(**kw):
    for k, v in kw.items():
        if v <= 0:
            raise ValueError(f"{k} must be positive, got {v}")


def wmmse_ops(U: int, N: int, T_bar: int = 100) -> int:
    _positive(U=U, N=N, T_bar=T_bar)
    return T_bar * (U * U * N + U * N**3)


def fno_ops(U: int, N: int, m_x: int, m_y: int, O_bar: int = 8, L_bar: int = 1) -> float:
    """``2 (2 U N log2 U + 2 U N log2 N + L m_x m_y + L O)``."""
    _positive(U=U, N=N, m_x=m_x, m_y=m_y, O_bar=O_bar, L_bar=L_bar)
    return 2 * (2 * U * N * math.log2(U) + 2 * U * N * math.log2(N) + L_bar * m_x * m_y + L_bar * O_bar)


def cnn_ops(U: int, N: int, k: int = 3, c_in: int = 2, c_out: int = 8) -> int:
    _positive(U=U, N=N, k=k, c_in=c_in, c_out=c_out)
    if k > U or k > N:
        raise ValueError("kernel larger than the input")
    return (U - k + 1) * (N - k + 1) * c_in * c_out * k * k


def dense_ops(l_in: int, l_out: int) -> int:
    _positive(l_in=l_in, l_out=l_out)
    return l_in * l_out


def complexity_estimate(U: int, N: int, modes=(8, 20), O_bar: int = 8, L_bar: int = 1, k: int = 3,
                        c_in: int = 2, c_out: int = 8, hidden: int = 512, T_bar: int = 100) -> dict:
    """Per-method operation counts for one HAPS-sized forward pass.

    The learned pipelines add the dense hidden layer (flattened features to
    ``hidden``) and the four heads (``hidden`` to ``U N`` twice and to ``U``
    twice) to their backbone term.
    """
    m_x, m_y = min(modes[0], U), min(modes[1], N)
    fno = fno_ops(U, N, m_x, m_y, O_bar, L_bar)
    tail_fno = dense_ops(O_bar * U * N, hidden)
    heads = 2 * dense_ops(hidden, U * N) + 2 * dense_ops(hidden, U)
    out = {
        "wmmse": wmmse_ops(U, N, T_bar),
        "fno_layer": fno,
        "fno_pipeline": fno + tail_fno + heads,
        "dense_heads": heads,
        "reference_fno_total": REFERENCE_FNO_TOTAL,
        "reference_cnn_total": REFERENCE_CNN_TOTAL,
    }
    if k <= U and k <= N:
        cnn = cnn_ops(U, N, k, c_in, c_out) + cnn_ops(U, N, k, c_out, c_out)
        out["cnn_layers"] = cnn
        out["cnn_pipeline"] = cnn + dense_ops(c_out * U * N, hidden) + heads
    return out
