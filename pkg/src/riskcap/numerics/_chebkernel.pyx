# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for batched tensor-Chebyshev evaluation.

This is the hot spot of the global solver: evaluating a stack of interpolants
sharing one tensor grid at many points per sweep.  A pure-NumPy fallback with
identical semantics lives in ``riskcap.numerics.kernel``; the package selects
whichever is importable at run time.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def cheb_basis(double[::1] x, int n):
    """Chebyshev T_0..T_{n-1} at points x in [-1, 1]; shape (len(x), n)."""
    cdef Py_ssize_t N = x.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((N, n))
    cdef double[:, ::1] B = out
    cdef Py_ssize_t p, k
    cdef double xp
    for p in range(N):
        xp = x[p]
        B[p, 0] = 1.0
        if n > 1:
            B[p, 1] = xp
        for k in range(2, n):
            B[p, k] = 2.0 * xp * B[p, k - 1] - B[p, k - 2]
    return out


def eval_tensor(double[:, ::1] coeffs, list basis, long[::1] shape):
    """Evaluate stacked interpolants on a shared tensor basis.

    coeffs : (n_out, n_coef) C-order flattening of the coefficient tensors
    basis  : list of d arrays (n_points, shape[d]) of 1-d Chebyshev bases
    shape  : per-dimension coefficient counts (prod == n_coef)

    Returns (n_points, n_out).
    """
    cdef Py_ssize_t d = shape.shape[0]
    cdef Py_ssize_t n_out = coeffs.shape[0]
    cdef Py_ssize_t n_coef = coeffs.shape[1]
    cdef Py_ssize_t N = (<object>basis[0]).shape[0]
    cdef Py_ssize_t max_n = 0
    cdef Py_ssize_t j
    for j in range(d):
        if shape[j] > max_n:
            max_n = shape[j]

    # pack the per-dimension bases into one padded buffer for pure-C loops
    cdef cnp.ndarray[cnp.float64_t, ndim=3] packed_np = np.zeros((d, N, max_n))
    for j in range(d):
        packed_np[j, :, : shape[j]] = basis[j]
    cdef double[:, :, ::1] packed = packed_np

    # decompose flat coefficient indices once
    cdef cnp.ndarray[cnp.int64_t, ndim=2] idx_np = np.empty((n_coef, d), dtype=np.int64)
    cdef long[:, ::1] idx = idx_np
    cdef Py_ssize_t f, rem
    for f in range(n_coef):
        rem = f
        for j in range(d - 1, -1, -1):
            idx[f, j] = rem % shape[j]
            rem //= shape[j]

    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_np = np.zeros((N, n_out))
    cdef double[:, ::1] out = out_np
    cdef double w
    cdef Py_ssize_t p, o
    for p in range(N):
        for f in range(n_coef):
            w = 1.0
            for j in range(d):
                w *= packed[j, p, idx[f, j]]
            for o in range(n_out):
                out[p, o] += coeffs[o, f] * w
    return out_np
