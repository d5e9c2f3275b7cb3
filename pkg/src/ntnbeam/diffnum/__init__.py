"""Small reverse-mode differentiation engine over numpy arrays."""

from ntnbeam.diffnum.core import (
    Tape,
    Tensor,
    abs2,
    active_tape,
    add,
    as_tensor,
    clip,
    concat,
    conj,
    div,
    exp,
    imag,
    log,
    log2,
    make_complex,
    matmul,
    mean,
    mul,
    neg,
    real,
    record,
    reshape,
    sqrt,
    sub,
    swapaxes,
    take,
    tanh,
    tsum,
)
from ntnbeam.diffnum.gradcheck import check_gradients
from ntnbeam.diffnum.nn import conv2d, dense, fft2, gaussian_sample, ifft2, relu, softmax, spectral_multiply
from ntnbeam.diffnum.optim import Adam, OptimizerState, adam_step

__all__ = [
    "Tape", "Tensor", "abs2", "active_tape", "add", "as_tensor", "clip", "concat", "conj", "div",
    "exp", "imag", "log", "log2", "make_complex", "matmul", "mean", "mul", "neg", "real", "record",
    "reshape", "sqrt", "sub", "swapaxes", "take", "tanh", "tsum", "check_gradients", "conv2d", "dense",
    "fft2", "gaussian_sample", "ifft2", "relu", "softmax", "spectral_multiply", "Adam",
    "OptimizerState", "adam_step",
]
