# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``glyset._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()


cdef inline double _log1pexp(double t) nogil:
    # log(1 + exp(t)) without overflow
    if t > 0:
        return t + log1p(exp(-t))
    return log1p(exp(t))


cdef inline double _sigmoid(double t) nogil:
    cdef double e
    if t >= 0:
        return 1.0 / (1.0 + exp(-t))
    e = exp(t)
    return e / (1.0 + e)


def logistic_loss_grad(const double[:, ::1] X, const double[::1] ysign,
                       const double[::1] w, double b, double C):
    cdef int n = <int>X.shape[0], d = <int>X.shape[1], i, j, one = 1
    cdef double z, m, c, loss = 0.0, gb = 0.0, ww = 0.0, alpha = 1.0, beta = 0.0
    cdef char trans_t = b'T', trans_n = b'N'
    margins = np.empty(n, dtype=np.float64)
    grad = np.zeros(d, dtype=np.float64)
    cdef double[::1] zz = margins
    cdef double[::1] g = grad
    if n == 0 or d == 0:
        return 0.5 * float(np.dot(w, w)), grad + np.asarray(w), 0.0
    with nogil:
        # row-major X (n x d) is column-major X^T (d x n): X @ w is a transposed gemv
        dgemv(&trans_t, &d, &n, &alpha, <double*>&X[0, 0], &d, <double*>&w[0], &one, &beta, &zz[0], &one)
        for i in range(n):
            z = zz[i] + b
            m = ysign[i] * z
            loss = loss + _log1pexp(-m)
            c = -ysign[i] * _sigmoid(-m)
            gb = gb + c
            zz[i] = c
        # X^T @ coef
        dgemv(&trans_n, &d, &n, &alpha, <double*>&X[0, 0], &d, &zz[0], &one, &beta, &g[0], &one)
        for j in range(d):
            ww = ww + w[j] * w[j]
            g[j] = w[j] + C * g[j]
    return 0.5 * ww + C * loss, grad, C * gb


def ds_log_terms(const cnp.intp_t[::1] item_idx, const cnp.intp_t[::1] worker_idx,
                 const cnp.intp_t[::1] obs, const double[:, :, ::1] log_theta,
                 Py_ssize_t n_items):
    cdef Py_ssize_t J = item_idx.shape[0], K = log_theta.shape[1], t, k
    out = np.zeros((n_items, K), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for t in range(J):
            for k in range(K):
                o[item_idx[t], k] += log_theta[worker_idx[t], k, obs[t]]
    return out


def ds_confusion_counts(const cnp.intp_t[::1] item_idx, const cnp.intp_t[::1] worker_idx,
                        const cnp.intp_t[::1] obs, const double[:, ::1] post,
                        Py_ssize_t n_workers):
    cdef Py_ssize_t J = item_idx.shape[0], K = post.shape[1], t, k
    counts = np.zeros((n_workers, K, K), dtype=np.float64)
    cdef double[:, :, ::1] c = counts
    with nogil:
        for t in range(J):
            for k in range(K):
                c[worker_idx[t], k, obs[t]] += post[item_idx[t], k]
    return counts


def coincidence_matrix(const cnp.intp_t[::1] unit_idx, const cnp.intp_t[::1] value_idx,
                       Py_ssize_t n_units, Py_ssize_t n_values):
    cdef Py_ssize_t J = unit_idx.shape[0], t, u, c, k
    cdef double mu
    table = np.zeros((n_units, n_values), dtype=np.float64)
    cdef double[:, ::1] tab = table
    o_arr = np.zeros((n_values, n_values), dtype=np.float64)
    cdef double[:, ::1] o = o_arr
    m_arr = np.zeros(n_units, dtype=np.float64)
    cdef double[::1] m = m_arr
    with nogil:
        for t in range(J):
            tab[unit_idx[t], value_idx[t]] += 1.0
            m[unit_idx[t]] += 1.0
        for u in range(n_units):
            mu = m[u]
            if mu < 2:
                continue
            for c in range(n_values):
                if tab[u, c] == 0:
                    continue
                for k in range(n_values):
                    if c == k:
                        o[c, k] += tab[u, c] * (tab[u, c] - 1.0) / (mu - 1.0)
                    else:
                        o[c, k] += tab[u, c] * tab[u, k] / (mu - 1.0)
    return o_arr
