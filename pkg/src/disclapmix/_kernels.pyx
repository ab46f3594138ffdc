# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled EM inner loops; same signatures and results as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p

cnp.import_array()


def log_norm_const(log_p):
    p = np.exp(log_p)
    return np.log1p(-p) - np.log1p(p)


def e_step(const cnp.int64_t[:, ::1] db, const cnp.int64_t[:, ::1] centers,
           const double[:, ::1] log_p, const double[::1] log_tau):
    cdef Py_ssize_t n = db.shape[0], r = db.shape[1], c = centers.shape[0]
    cdef Py_ssize_t i, j, k
    cdef cnp.int64_t d
    cdef double m, s, acc, pk
    resp_arr = np.empty((n, c), dtype=np.float64)
    ll_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] resp = resp_arr
    cdef double[::1] row_ll = ll_arr
    base_arr = np.empty(c, dtype=np.float64)
    cdef double[::1] base = base_arr
    with nogil:
        for j in range(c):
            acc = log_tau[j]
            for k in range(r):
                pk = exp(log_p[j, k])
                acc += log1p(-pk) - log1p(pk)
            base[j] = acc
        for i in range(n):
            m = -1e308
            for j in range(c):
                acc = base[j]
                for k in range(r):
                    d = db[i, k] - centers[j, k]
                    if d < 0:
                        d = -d
                    acc += d * log_p[j, k]
                resp[i, j] = acc
                if acc > m:
                    m = acc
            s = 0.0
            for j in range(c):
                s += exp(resp[i, j] - m)
            row_ll[i] = m + log(s)
            s = 0.0
            for j in range(c):
                resp[i, j] = exp(resp[i, j] - row_ll[i])
                s += resp[i, j]
            for j in range(c):
                resp[i, j] /= s
    return resp_arr, ll_arr


def log_density(xs, centers, log_p, log_tau):
    _, row_ll = e_step(xs, centers, log_p, log_tau)
    return row_ll


def abs_dev_sums(const cnp.int64_t[:, ::1] db, const cnp.int64_t[:, ::1] centers,
                 const double[:, ::1] resp):
    cdef Py_ssize_t n = db.shape[0], r = db.shape[1], c = centers.shape[0]
    cdef Py_ssize_t i, j, k
    cdef cnp.int64_t d
    out_arr = np.zeros((c, r), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            for j in range(c):
                for k in range(r):
                    d = db[i, k] - centers[j, k]
                    if d < 0:
                        d = -d
                    out[j, k] += resp[i, j] * d
    return out_arr


def weighted_medians(const cnp.int64_t[:, ::1] db, const cnp.int64_t[:, ::1] order,
                     const double[:, ::1] resp):
    cdef Py_ssize_t n = db.shape[0], r = db.shape[1], c = resp.shape[1]
    cdef Py_ssize_t i, j, k, row
    cdef double total, half, cum
    out_arr = np.empty((c, r), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    with nogil:
        for k in range(r):
            for j in range(c):
                total = 0.0
                for i in range(n):
                    total += resp[order[i, k], j]
                half = 0.5 * total
                cum = 0.0
                row = order[n - 1, k]
                for i in range(n):
                    cum += resp[order[i, k], j]
                    if cum >= half:
                        row = order[i, k]
                        break
                out[j, k] = db[row, k]
    return out_arr
