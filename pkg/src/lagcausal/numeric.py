"""Small differentiable numeric layer used by the causal convolution model.

Only the handful of operations the model needs are provided: causal dilated
1-D convolution (forward and adjoint), truncated trace-of-powers series with
its gradient, and a bias-corrected Adam optimizer. Everything is float64.

The convolution functions broadcast over leading axes, so a whole bank of
depthwise filters of shape ``(..., k_w)`` can be applied to signals of shape
``(..., T)`` in one call.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteGradientError(FloatingPointError):
    """Raised when an optimizer step receives a NaN or infinite gradient."""

    def __init__(self, name: str):
        super().__init__(f"non-finite gradient for parameter {name!r}")
        self.name = name


def _shift_right(x: np.ndarray, s: int) -> np.ndarray:
    # out[..., t] = x[..., t - s], zero where t - s < 0
    if s == 0:
        return x
    out = np.zeros_like(x)
    if s < x.shape[-1]:
        out[..., s:] = x[..., :-s]
    return out


def _shift_left(x: np.ndarray, s: int) -> np.ndarray:
    # adjoint of _shift_right: out[..., t] = x[..., t + s]
    if s == 0:
        return x
    out = np.zeros_like(x)
    if s < x.shape[-1]:
        out[..., :-s] = x[..., s:]
    return out


def _check_conv_args(x: np.ndarray, kernel: np.ndarray, dilation: int) -> None:
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("input sequence must be non-empty")
    if kernel.ndim == 0 or kernel.shape[-1] == 0:
        raise ValueError("kernel must be non-empty")
    if int(dilation) != dilation or dilation < 1:
        raise ValueError(f"dilation must be a positive integer, got {dilation!r}")


def causal_dilated_conv(x, kernel, dilation: int = 1) -> np.ndarray:
    """Causal dilated convolution with zero left-padding.

    ``out[t] = sum_j kernel[j] * x[t - (k_w - 1 - j) * dilation]``; the last
    kernel tap multiplies the current sample. The output has the same length
    as the input and ``out[t]`` only depends on ``x[:t + 1]``.
    """
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    _check_conv_args(x, kernel, dilation)
    k_w = kernel.shape[-1]
    out = np.zeros(np.broadcast_shapes(x.shape[:-1], kernel.shape[:-1]) + x.shape[-1:])
    for j in range(k_w):
        out += kernel[..., j, None] * _shift_right(x, (k_w - 1 - j) * dilation)
    return out


def causal_dilated_conv_backward(upstream, x, kernel, dilation: int = 1):
    """Adjoint of :func:`causal_dilated_conv`.

    Returns ``(grad_input, grad_kernel)`` for an upstream gradient of the
    output. Leading axes of ``x`` and ``kernel`` must match exactly (no
    broadcasting) so the kernel gradient keeps the kernel's shape.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    _check_conv_args(x, kernel, dilation)
    if upstream.shape != x.shape:
        raise ValueError(f"upstream shape {upstream.shape} does not match input shape {x.shape}")
    if kernel.shape[:-1] != x.shape[:-1]:
        raise ValueError(f"kernel batch shape {kernel.shape[:-1]} does not match input {x.shape[:-1]}")
    k_w = kernel.shape[-1]
    grad_input = np.zeros_like(x)
    grad_kernel = np.zeros_like(kernel)
    for j in range(k_w):
        s = (k_w - 1 - j) * dilation
        grad_input += kernel[..., j, None] * _shift_left(upstream, s)
        grad_kernel[..., j] = np.sum(upstream * _shift_right(x, s), axis=-1)
    return grad_input, grad_kernel


def trace_power_series(A, beta: float = 1.0, K: int | None = None):
    """Value and gradient of ``sum_{k=1..K} beta**k * tr(A**k)``.

    Uses ``d tr(A^k) / dA = k (A^{k-1})^T``. ``K`` defaults to the matrix size.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if K is None:
        K = n
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    value = 0.0
    grad = np.zeros_like(A)
    prev = np.eye(n)  # A^{k-1}
    coef = 1.0
    for k in range(1, K + 1):
        coef *= beta
        grad += coef * k * prev.T
        prev = prev @ A
        value += coef * np.trace(prev)
    return float(value), grad


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Apply one bias-corrected Adam update to ``params`` in place.

    Every gradient is checked before anything is modified, so a bad gradient
    leaves both the parameters and the optimizer state untouched.
    """
    for name in params:
        g = np.asarray(grads[name])
        if g.shape != np.shape(params[name]):
            raise ValueError(f"gradient shape {g.shape} does not match parameter {name!r}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name)

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if name not in state.m:
            state.m[name] = np.zeros_like(p, dtype=np.float64)
            state.v[name] = np.zeros_like(p, dtype=np.float64)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= (state.lr / bc1) * m / (np.sqrt(v / bc2) + state.eps)
