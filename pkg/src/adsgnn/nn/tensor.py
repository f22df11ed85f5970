"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation records its inputs and a backward closure on the produced
Tensor, forming the tape.  Calling backward() on a scalar output walks the
tape in reverse topological order and accumulates partial derivatives into
the .grad of every tensor created with requires_grad=True.

Tape guarantees relied on elsewhere:
  * gradients of a sum equal the sum of gradients (accumulation is +=),
  * constants (requires_grad=False subgraphs) contribute no tape nodes,
  * all data is float64 and C-contiguous.
"""

from __future__ import annotations

import contextlib

import numpy as np

from . import kernels

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (evaluation-only forwards)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar used throughout the model code
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _result(data, parents, backward):
    """Wrap an op result, recording the tape edge only when it can matter."""
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accum(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g)
    else:
        t.grad += g


def _unbroadcast(g, shape):
    """Reduce gradient g back to `shape` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _result(data, (a, b), backward)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data - b.data

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, -_unbroadcast(g, b.data.shape))

    return _result(data, (a, b), backward)


def mul(a, b):
    if isinstance(b, (int, float)):
        a = as_tensor(a)
        c = float(b)
        data = a.data * c

        def backward_scalar(g):
            _accum(a, g * c)

        return _result(data, (a,), backward_scalar)
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _result(data, (a, b), backward)


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            _accum(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ g
            _accum(b, _unbroadcast(gb, b.data.shape))

    return _result(data, (a, b), backward)


def reshape(t, shape):
    t = as_tensor(t)
    old = t.data.shape
    data = t.data.reshape(shape)

    def backward(g):
        _accum(t, g.reshape(old))

    return _result(data, (t,), backward)


def transpose(t, axes):
    t = as_tensor(t)
    data = np.ascontiguousarray(np.transpose(t.data, axes))
    inverse = np.argsort(axes)

    def backward(g):
        _accum(t, np.ascontiguousarray(np.transpose(g, inverse)))

    return _result(data, (t,), backward)


def concat(tensors, axis):
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            _accum(t, np.ascontiguousarray(g[tuple(idx)]))

    return _result(data, tuple(tensors), backward)


def narrow(t, axis, start, length):
    """Contiguous slice [start, start+length) along one axis."""
    t = as_tensor(t)
    idx = [slice(None)] * t.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    data = np.ascontiguousarray(t.data[idx])

    def backward(g):
        full = np.zeros_like(t.data)
        full[idx] = g
        _accum(t, full)

    return _result(data, (t,), backward)


def embedding(table, ids):
    """Row gather: out[..., :] = table[ids[...]]."""
    table = as_tensor(table)
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ValueError("token id out of range for the embedding table")
    data = table.data[ids]

    def backward(g):
        if not table.requires_grad:
            return
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, ids.ravel(), g.reshape(-1, table.data.shape[1]))

    return _result(data, (table,), backward)


def take_rows(t, idx):
    """Gather rows of a 2-d tensor by integer index."""
    t = as_tensor(t)
    idx = np.asarray(idx)
    data = t.data[idx]

    def backward(g):
        if not t.requires_grad:
            return
        if t.grad is None:
            t.grad = np.zeros_like(t.data)
        np.add.at(t.grad, idx, g)

    return _result(data, (t,), backward)


def masked_softmax(t, additive_mask=None, zero_empty=False):
    """Softmax over the last axis with optional additive -inf masking.

    Fully masked rows yield all-zero rows when zero_empty is set and raise
    otherwise.
    """
    t = as_tensor(t)
    x = t.data if additive_mask is None else t.data + additive_mask
    flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
    y2 = kernels.softmax_fwd(flat)
    if not zero_empty:
        rowsum = y2.sum(axis=-1)
        if not np.all(rowsum > 0.0):
            raise ValueError("softmax over a fully masked (all -inf) row")
    data = y2.reshape(x.shape)

    def backward(g):
        g2 = np.ascontiguousarray(g.reshape(-1, g.shape[-1]))
        gx = kernels.softmax_bwd(y2, g2)
        _accum(t, gx.reshape(t.data.shape))

    return _result(data, (t,), backward)


def softmax(t):
    """Plain stable softmax over the last axis; all--inf input is an error."""
    return masked_softmax(t, None, zero_empty=False)


def layer_norm(t, gamma, beta, eps=1e-5):
    t, gamma, beta = as_tensor(t), as_tensor(gamma), as_tensor(beta)
    shape = t.data.shape
    flat = np.ascontiguousarray(t.data.reshape(-1, shape[-1]))
    y2, xhat, rstd = kernels.layernorm_fwd(flat, gamma.data, beta.data, eps)
    data = y2.reshape(shape)

    def backward(g):
        g2 = np.ascontiguousarray(g.reshape(-1, shape[-1]))
        gx, ggamma, gbeta = kernels.layernorm_bwd(xhat, rstd, gamma.data, g2)
        _accum(t, gx.reshape(shape))
        _accum(gamma, ggamma)
        _accum(beta, gbeta)

    return _result(data, (t, gamma, beta), backward)


def gelu(t):
    t = as_tensor(t)
    flat = np.ascontiguousarray(t.data.reshape(-1))
    data = kernels.gelu_fwd(flat).reshape(t.data.shape)

    def backward(g):
        gx = kernels.gelu_bwd(flat, np.ascontiguousarray(g.reshape(-1)))
        _accum(t, gx.reshape(t.data.shape))

    return _result(data, (t,), backward)


def elu(t, alpha=1.0):
    t = as_tensor(t)
    neg = t.data < 0.0
    expm1 = np.expm1(t.data, where=neg, out=np.zeros_like(t.data))
    data = np.where(neg, alpha * expm1, t.data)

    def backward(g):
        _accum(t, g * np.where(neg, alpha * (expm1 + 1.0), 1.0))

    return _result(data, (t,), backward)


def leaky_relu(t, alpha=0.2):
    t = as_tensor(t)
    neg = t.data < 0.0
    data = np.where(neg, alpha * t.data, t.data)

    def backward(g):
        _accum(t, g * np.where(neg, alpha, 1.0))

    return _result(data, (t,), backward)


def tanh(t):
    t = as_tensor(t)
    data = np.tanh(t.data)

    def backward(g):
        _accum(t, g * (1.0 - data * data))

    return _result(data, (t,), backward)


def log(t):
    t = as_tensor(t)
    data = np.log(t.data)

    def backward(g):
        _accum(t, g / t.data)

    return _result(data, (t,), backward)


def clamp_min(t, floor):
    t = as_tensor(t)
    keep = t.data > floor
    data = np.where(keep, t.data, floor)

    def backward(g):
        _accum(t, g * keep)

    return _result(data, (t,), backward)


def sum_all(t):
    t = as_tensor(t)
    data = np.asarray(t.data.sum())

    def backward(g):
        _accum(t, np.broadcast_to(g, t.data.shape).copy())

    return _result(data, (t,), backward)


def sum_axis(t, axis, keepdims=False):
    t = as_tensor(t)
    data = t.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(t, np.broadcast_to(g, t.data.shape).copy())

    return _result(data, (t,), backward)


def mean_all(t):
    return mul(sum_all(t), 1.0 / as_tensor(t).data.size)
