# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training kernels; mirrors ``_pykernels`` function-for-function."""

from libc.math cimport exp, log, sqrt, tanh

import numpy as np

NAME = "compiled"


def affine(const double[:, ::1] W, const double[::1] b, const double[::1] x, double[::1] out):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n_out = W.shape[0], n_in = W.shape[1]
    cdef double acc
    for i in range(n_out):
        acc = b[i]
        for j in range(n_in):
            acc += W[i, j] * x[j]
        out[i] = acc


def affine_sparse(const double[:, ::1] W, const double[::1] b, const long[::1] idx,
                  const double[::1] val, double[::1] out):
    cdef Py_ssize_t i, k
    cdef Py_ssize_t n_out = W.shape[0], nnz = idx.shape[0]
    cdef double acc
    for i in range(n_out):
        acc = b[i]
        for k in range(nnz):
            acc += W[i, idx[k]] * val[k]
        out[i] = acc


def tanh_inplace(double[::1] z):
    cdef Py_ssize_t i
    for i in range(z.shape[0]):
        z[i] = tanh(z[i])


def softmax_inplace(double[::1] z):
    cdef Py_ssize_t i
    cdef Py_ssize_t n = z.shape[0]
    cdef double zmax = z[0], total = 0.0
    for i in range(1, n):
        if z[i] > zmax:
            zmax = z[i]
    for i in range(n):
        z[i] = exp(z[i] - zmax)
        total += z[i]
    for i in range(n):
        z[i] /= total


def tanh_backward(const double[::1] y, const double[::1] grad_y, double[::1] out):
    cdef Py_ssize_t i
    for i in range(y.shape[0]):
        out[i] = grad_y[i] * (1.0 - y[i] * y[i])


def affine_backward_params(const double[::1] x, const double[::1] delta,
                           double[:, ::1] gW, double[::1] gb):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n_out = gW.shape[0], n_in = gW.shape[1]
    cdef double d
    for i in range(n_out):
        d = delta[i]
        for j in range(n_in):
            gW[i, j] += d * x[j]
        gb[i] += d
    return None


def affine_backward_params_sparse(const long[::1] idx, const double[::1] val,
                                  const double[::1] delta, double[:, ::1] gW,
                                  double[::1] gb):
    cdef Py_ssize_t i, k
    cdef Py_ssize_t n_out = gW.shape[0], nnz = idx.shape[0]
    cdef double d
    for i in range(n_out):
        d = delta[i]
        for k in range(nnz):
            gW[i, idx[k]] += d * val[k]
        gb[i] += d
    return None


def affine_backward_input(const double[:, ::1] W, const double[::1] delta, double[::1] gx):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n_out = W.shape[0], n_in = W.shape[1]
    cdef double d
    for j in range(n_in):
        gx[j] = 0.0
    for i in range(n_out):
        d = delta[i]
        for j in range(n_in):
            gx[j] += W[i, j] * d


def kl_div(const long[::1] idx, const double[::1] val, const double[::1] q):
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(idx.shape[0]):
        acc += val[k] * (log(val[k]) - log(q[idx[k]]))
    return acc


def softmax_kl_delta(const double[::1] q, const long[::1] idx, const double[::1] val,
                     double[::1] out):
    cdef Py_ssize_t i, k
    for i in range(q.shape[0]):
        out[i] = q[i]
    for k in range(idx.shape[0]):
        out[idx[k]] -= val[k]


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t i
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double mhat, vhat
    for i in range(p.shape[0]):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        mhat = m[i] / c1
        vhat = v[i] / c2
        p[i] -= lr * mhat / (sqrt(vhat) + eps)
