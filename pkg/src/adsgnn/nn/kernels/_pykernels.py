"""Pure-numpy implementations of the hot numeric kernels.

These are the reference semantics; the compiled module in _ckernels.pyx
implements the same contracts.  All functions take C-contiguous float64
arrays.  Softmax and layer-norm kernels operate row-wise on 2-d inputs;
callers reshape n-d activations to (rows, cols) first.
"""

import numpy as np

# tanh-form GELU constants
_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


def softmax_fwd(x):
    """Row softmax with -inf masking support.

    Rows whose entries are all -inf produce all-zero rows instead of NaN;
    the caller decides whether an empty row is an error.
    """
    m = np.max(x, axis=-1, keepdims=True)
    m = np.where(np.isneginf(m), 0.0, m)
    e = np.exp(x - m)
    s = np.sum(e, axis=-1, keepdims=True)
    return np.divide(e, s, out=np.zeros_like(e), where=s > 0.0)


def softmax_bwd(y, gy):
    dot = np.sum(y * gy, axis=-1, keepdims=True)
    return y * (gy - dot)


def layernorm_fwd(x, gamma, beta, eps):
    """Returns (y, xhat, rstd); xhat and rstd are reused by the backward pass."""
    mu = np.mean(x, axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    return xhat * gamma + beta, xhat, rstd


def layernorm_bwd(xhat, rstd, gamma, gy):
    """Returns (gx, ggamma, gbeta)."""
    gxhat = gy * gamma
    m1 = np.mean(gxhat, axis=-1, keepdims=True)
    m2 = np.mean(gxhat * xhat, axis=-1, keepdims=True)
    gx = rstd * (gxhat - m1 - xhat * m2)
    ggamma = np.sum(gy * xhat, axis=0)
    gbeta = np.sum(gy, axis=0)
    return gx, ggamma, gbeta


def gelu_fwd(x):
    u = _GELU_C * (x + _GELU_A * x * x * x)
    return 0.5 * x * (1.0 + np.tanh(u))


def gelu_bwd(x, gy):
    u = _GELU_C * (x + _GELU_A * x * x * x)
    t = np.tanh(u)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return gy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step, in place on p, m and v (flat views)."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)
