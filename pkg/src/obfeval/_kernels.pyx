# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical hot kernels.

Same contract as obfeval._kernels_py; see that module for documentation.
The explicit C loops avoid per-iteration numpy dispatch overhead, which
dominates for the small matrices this toolkit works with.
"""

import numpy as np

from libc.math cimport exp2, log2

BACKEND = "compiled"


def ba_iterate(rows, double tol, long max_iter):
    cdef const double[:, ::1] w = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t n = w.shape[1]

    prior_arr = np.full(m, 1.0 / m)
    marginal_arr = np.empty(n)
    log_marginal_arr = np.empty(n)
    per_input_arr = np.empty(m)
    row_term_arr = np.empty(m)
    cdef double[::1] prior = prior_arr
    cdef double[::1] marginal = marginal_arr
    cdef double[::1] log_marginal = log_marginal_arr
    cdef double[::1] per_input = per_input_arr
    cdef double[::1] row_term = row_term_arr

    cdef double lower = 0.0
    cdef double upper = 0.0
    cdef double acc, wxe, total
    cdef Py_ssize_t x, e
    cdef long iteration

    # D[x] = sum_e W[e|x] log2 W[e|x] - sum_e W[e|x] log2 P(e); the first
    # term never changes across iterations.
    for x in range(m):
        acc = 0.0
        for e in range(n):
            wxe = w[x, e]
            if wxe > 0.0:
                acc += wxe * log2(wxe)
        row_term[x] = acc

    for iteration in range(1, max_iter + 1):
        for e in range(n):
            marginal[e] = 0.0
        for x in range(m):
            acc = prior[x]
            for e in range(n):
                marginal[e] += acc * w[x, e]
        for e in range(n):
            log_marginal[e] = log2(marginal[e]) if marginal[e] > 0.0 else 0.0
        for x in range(m):
            acc = 0.0
            for e in range(n):
                acc += w[x, e] * log_marginal[e]
            per_input[x] = row_term[x] - acc
        lower = 0.0
        upper = per_input[0]
        for x in range(m):
            lower += prior[x] * per_input[x]
            if per_input[x] > upper:
                upper = per_input[x]
        if upper - lower < tol:
            return lower, upper, prior_arr, iteration, True
        total = 0.0
        for x in range(m):
            prior[x] = prior[x] * exp2(per_input[x] - upper)
            total += prior[x]
        for x in range(m):
            prior[x] /= total
    return lower, upper, prior_arr, max_iter, False


def mutual_information_bits(prior, rows):
    cdef const double[::1] p = np.ascontiguousarray(prior, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(rows, dtype=np.float64)
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t n = w.shape[1]
    cdef Py_ssize_t x, e
    cdef double acc, wxe, total

    marginal_arr = np.empty(n)
    cdef double[::1] marginal = marginal_arr
    for e in range(n):
        acc = 0.0
        for x in range(m):
            acc += p[x] * w[x, e]
        marginal[e] = acc

    total = 0.0
    for x in range(m):
        if p[x] > 0.0:
            for e in range(n):
                wxe = w[x, e]
                if wxe > 0.0 and marginal[e] > 0.0:
                    total += p[x] * wxe * (log2(wxe) - log2(marginal[e]))
    return total if total > 0.0 else 0.0
