# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for weighted Gaussian-kernel double sums.

Both kernel variants reduce to ``exp(-||u - v||^2)`` after the points are
pre-scaled (isotropic: divide by h*sqrt(2); quadratic form: multiply by the
Cholesky factor of the scale matrix), so a single primitive covers them.
The row-wise two-pass layout (distances, then exp-accumulate) lets the
compiler vectorize the exp calls.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp
from libc.stdlib cimport free, malloc

cnp.import_array()


def weighted_gauss_sum(const double[:, ::1] u, const double[::1] b,
                       const double[:, ::1] v, const double[::1] g):
    """Return sum_ij b[i] * g[j] * exp(-||u[i] - v[j]||^2).

    Summation runs over j for each fixed i, then over i, so the result is
    deterministic for fixed inputs.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t p = u.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double total = 0.0, row, d2, diff
    cdef double *scratch

    if v.shape[1] != p:
        raise ValueError("point sets have mismatched dimensions")
    if b.shape[0] != n or g.shape[0] != m:
        raise ValueError("weight lengths do not match point counts")

    scratch = <double *> malloc(m * sizeof(double))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                if p == 1:
                    for j in range(m):
                        diff = u[i, 0] - v[j, 0]
                        scratch[j] = diff * diff
                elif p == 2:
                    for j in range(m):
                        diff = u[i, 0] - v[j, 0]
                        d2 = diff * diff
                        diff = u[i, 1] - v[j, 1]
                        scratch[j] = d2 + diff * diff
                else:
                    for j in range(m):
                        d2 = 0.0
                        for k in range(p):
                            diff = u[i, k] - v[j, k]
                            d2 += diff * diff
                        scratch[j] = d2
                row = 0.0
                for j in range(m):
                    row += g[j] * exp(-scratch[j])
                total += b[i] * row
    finally:
        free(scratch)
    return total
