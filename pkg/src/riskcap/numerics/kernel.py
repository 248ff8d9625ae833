"""Kernel dispatch for batched Chebyshev evaluation.

At import time we try the compiled Cython kernel
(:mod:`riskcap.numerics._chebkernel`); if it is unavailable (no compiler,
source-only install) we fall back to a vectorized NumPy implementation with
identical semantics.  ``KERNEL_BACKEND`` records which one is active;
``benchmarks/bench_cheb.py`` compares the two.
"""

from __future__ import annotations

import numpy as np

try:  # pragma: no cover - depends on build environment
    from . import _chebkernel as _C

    KERNEL_BACKEND = "cython"
except ImportError:  # pragma: no cover
    _C = None
    KERNEL_BACKEND = "numpy"


def cheb_basis_numpy(x: np.ndarray, n: int) -> np.ndarray:
    """Chebyshev T_0..T_{n-1} at points x in [-1,1]; shape (len(x), n)."""
    x = np.asarray(x, dtype=float)
    B = np.empty((x.size, n))
    B[:, 0] = 1.0
    if n > 1:
        B[:, 1] = x
    for k in range(2, n):
        B[:, k] = 2.0 * x * B[:, k - 1] - B[:, k - 2]
    return B


def eval_tensor_numpy(coeffs2: np.ndarray, basis: list[np.ndarray], shape) -> np.ndarray:
    """NumPy reference for the compiled kernel (sequential contraction)."""
    shape = tuple(int(s) for s in shape)
    n_out = coeffs2.shape[0]
    C = coeffs2.reshape((n_out,) + shape)
    # contract dim by dim; after the first contraction the point axis appears
    T = np.tensordot(basis[0], C, axes=([1], [1]))  # (N, n_out, n2..nd)
    for B in basis[1:]:
        # T: (N, n_out, k, rest...), B: (N, k)
        T = np.einsum("pok...,pk->po...", T, B, optimize=True)
    return np.ascontiguousarray(T)  # (N, n_out)


def cheb_basis(x: np.ndarray, n: int) -> np.ndarray:
    if _C is not None:
        return _C.cheb_basis(np.ascontiguousarray(x, dtype=float), int(n))
    return cheb_basis_numpy(x, n)


def eval_tensor(coeffs2: np.ndarray, basis: list[np.ndarray], shape) -> np.ndarray:
    shape = np.asarray(shape, dtype=np.int64)
    if _C is not None:
        return _C.eval_tensor(
            np.ascontiguousarray(coeffs2, dtype=float),
            [np.ascontiguousarray(b, dtype=float) for b in basis],
            np.ascontiguousarray(shape),
        )
    return eval_tensor_numpy(coeffs2, basis, shape)
