# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot numeric kernels.

Same contracts as _pykernels: row-wise softmax/layer-norm on 2-d float64
arrays, elementwise GELU, in-place Adam.  Loops are fused so each kernel
makes a single pass where the numpy versions allocate temporaries.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, sqrt, tanh

cnp.import_array()

cdef double GELU_C = 0.7978845608028654
cdef double GELU_A = 0.044715


def softmax_fwd(cnp.ndarray[double, ndim=2] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] y = np.empty((rows, cols))
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] yv = y
    cdef Py_ssize_t i, j
    cdef double m, s
    with nogil:
        for i in range(rows):
            m = -INFINITY
            for j in range(cols):
                if xv[i, j] > m:
                    m = xv[i, j]
            if m == -INFINITY:
                for j in range(cols):
                    yv[i, j] = 0.0
                continue
            s = 0.0
            for j in range(cols):
                yv[i, j] = exp(xv[i, j] - m)
                s += yv[i, j]
            for j in range(cols):
                yv[i, j] /= s
    return y


def softmax_bwd(cnp.ndarray[double, ndim=2] y, cnp.ndarray[double, ndim=2] gy):
    cdef Py_ssize_t rows = y.shape[0], cols = y.shape[1]
    cdef cnp.ndarray[double, ndim=2] gx = np.empty((rows, cols))
    cdef double[:, ::1] yv = y
    cdef double[:, ::1] gv = gy
    cdef double[:, ::1] ov = gx
    cdef Py_ssize_t i, j
    cdef double dot
    with nogil:
        for i in range(rows):
            dot = 0.0
            for j in range(cols):
                dot += yv[i, j] * gv[i, j]
            for j in range(cols):
                ov[i, j] = yv[i, j] * (gv[i, j] - dot)
    return gx


def layernorm_fwd(cnp.ndarray[double, ndim=2] x,
                  cnp.ndarray[double, ndim=1] gamma,
                  cnp.ndarray[double, ndim=1] beta,
                  double eps):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] y = np.empty((rows, cols))
    cdef cnp.ndarray[double, ndim=2] xhat = np.empty((rows, cols))
    cdef cnp.ndarray[double, ndim=2] rstd = np.empty((rows, 1))
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] yv = y
    cdef double[:, ::1] hv = xhat
    cdef double[:, ::1] rv = rstd
    cdef double[::1] gv = gamma
    cdef double[::1] bv = beta
    cdef Py_ssize_t i, j
    cdef double mu, var, r, h
    with nogil:
        for i in range(rows):
            mu = 0.0
            for j in range(cols):
                mu += xv[i, j]
            mu /= cols
            var = 0.0
            for j in range(cols):
                var += (xv[i, j] - mu) * (xv[i, j] - mu)
            var /= cols
            r = 1.0 / sqrt(var + eps)
            rv[i, 0] = r
            for j in range(cols):
                h = (xv[i, j] - mu) * r
                hv[i, j] = h
                yv[i, j] = h * gv[j] + bv[j]
    return y, xhat, rstd


def layernorm_bwd(cnp.ndarray[double, ndim=2] xhat,
                  cnp.ndarray[double, ndim=2] rstd,
                  cnp.ndarray[double, ndim=1] gamma,
                  cnp.ndarray[double, ndim=2] gy):
    cdef Py_ssize_t rows = xhat.shape[0], cols = xhat.shape[1]
    cdef cnp.ndarray[double, ndim=2] gx = np.empty((rows, cols))
    cdef cnp.ndarray[double, ndim=1] ggamma = np.zeros(cols)
    cdef cnp.ndarray[double, ndim=1] gbeta = np.zeros(cols)
    cdef double[:, ::1] hv = xhat
    cdef double[:, ::1] rv = rstd
    cdef double[::1] gv = gamma
    cdef double[:, ::1] dv = gy
    cdef double[:, ::1] ov = gx
    cdef double[::1] ggv = ggamma
    cdef double[::1] gbv = gbeta
    cdef Py_ssize_t i, j
    cdef double m1, m2, gxh
    with nogil:
        for i in range(rows):
            m1 = 0.0
            m2 = 0.0
            for j in range(cols):
                gxh = dv[i, j] * gv[j]
                m1 += gxh
                m2 += gxh * hv[i, j]
            m1 /= cols
            m2 /= cols
            for j in range(cols):
                gxh = dv[i, j] * gv[j]
                ov[i, j] = rv[i, 0] * (gxh - m1 - hv[i, j] * m2)
                ggv[j] += dv[i, j] * hv[i, j]
                gbv[j] += dv[i, j]
    return gx, ggamma, gbeta


def gelu_fwd(cnp.ndarray[double, ndim=1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] y = np.empty(n)
    cdef double[::1] xv = x
    cdef double[::1] yv = y
    cdef Py_ssize_t i
    cdef double u
    with nogil:
        for i in range(n):
            u = GELU_C * (xv[i] + GELU_A * xv[i] * xv[i] * xv[i])
            yv[i] = 0.5 * xv[i] * (1.0 + tanh(u))
    return y


def gelu_bwd(cnp.ndarray[double, ndim=1] x, cnp.ndarray[double, ndim=1] gy):
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[double, ndim=1] gx = np.empty(n)
    cdef double[::1] xv = x
    cdef double[::1] dv = gy
    cdef double[::1] ov = gx
    cdef Py_ssize_t i
    cdef double u, t, du
    with nogil:
        for i in range(n):
            u = GELU_C * (xv[i] + GELU_A * xv[i] * xv[i] * xv[i])
            t = tanh(u)
            du = GELU_C * (1.0 + 3.0 * GELU_A * xv[i] * xv[i])
            ov[i] = dv[i] * (0.5 * (1.0 + t) + 0.5 * xv[i] * (1.0 - t * t) * du)
    return gx


def adam_update(cnp.ndarray[double, ndim=1] p,
                cnp.ndarray[double, ndim=1] g,
                cnp.ndarray[double, ndim=1] m,
                cnp.ndarray[double, ndim=1] v,
                long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t n = p.shape[0]
    cdef double[::1] pv = p
    cdef double[::1] gv = g
    cdef double[::1] mv = m
    cdef double[::1] vv = v
    cdef double c1 = 1.0 - beta1**t
    cdef double c2 = 1.0 - beta2**t
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            mv[i] = beta1 * mv[i] + (1.0 - beta1) * gv[i]
            vv[i] = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i]
            pv[i] -= lr * (mv[i] / c1) / (sqrt(vv[i] / c2) + eps)
