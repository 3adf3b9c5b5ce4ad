# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: one-sided Jacobi SVD and batched range projections.

Mirrors ``_pykernels.py`` operation for operation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"

cdef double _ORTH_TOL = 1e-15
cdef int _MAX_SWEEPS = 60


cdef void _jacobi(double* W, int r, int c, double* V) noexcept nogil:
    cdef int i, j, k, sweep
    cdef bint rotated
    cdef double alpha, beta, gamma, zeta, t, cs, sn, a, b
    for j in range(c):
        for k in range(c):
            V[j * c + k] = 1.0 if j == k else 0.0
    for sweep in range(_MAX_SWEEPS):
        rotated = False
        for i in range(c - 1):
            for j in range(i + 1, c):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(r):
                    alpha += W[i * r + k] * W[i * r + k]
                    beta += W[j * r + k] * W[j * r + k]
                    gamma += W[i * r + k] * W[j * r + k]
                if gamma == 0.0 or fabs(gamma) <= _ORTH_TOL * sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if fabs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = 1.0 / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                    if zeta < 0.0:
                        t = -t
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = cs * t
                for k in range(r):
                    a = W[i * r + k]
                    b = W[j * r + k]
                    W[i * r + k] = cs * a - sn * b
                    W[j * r + k] = sn * a + cs * b
                for k in range(c):
                    a = V[i * c + k]
                    b = V[j * c + k]
                    V[i * c + k] = cs * a - sn * b
                    V[j * c + k] = sn * a + cs * b
        if not rotated:
            break


cdef void _orthonormalize(double* cand, int ncol, int r, double* out, double* e) noexcept nogil:
    # cand and out hold ncol columns of length r
    cdef int j, p, k, q
    cdef double d, nrm, en, best_nrm
    cdef int best
    for j in range(ncol):
        for k in range(r):
            out[j * r + k] = cand[j * r + k]
        for p in range(j):
            d = 0.0
            for k in range(r):
                d += out[p * r + k] * out[j * r + k]
            for k in range(r):
                out[j * r + k] -= d * out[p * r + k]
        nrm = 0.0
        for k in range(r):
            nrm += out[j * r + k] * out[j * r + k]
        nrm = sqrt(nrm)
        if nrm <= 0.5:
            best = -1
            best_nrm = -1.0
            for q in range(r):
                for k in range(r):
                    e[k] = 0.0
                e[q] = 1.0
                for p in range(j):
                    d = out[p * r + q]
                    for k in range(r):
                        e[k] -= d * out[p * r + k]
                en = 0.0
                for k in range(r):
                    en += e[k] * e[k]
                en = sqrt(en)
                if en > best_nrm:
                    best = q
                    best_nrm = en
            # recompute the winning candidate
            for k in range(r):
                e[k] = 0.0
            e[best] = 1.0
            for p in range(j):
                d = out[p * r + best]
                for k in range(r):
                    e[k] -= d * out[p * r + k]
            for k in range(r):
                out[j * r + k] = e[k]
            nrm = best_nrm
        for k in range(r):
            out[j * r + k] = out[j * r + k] / nrm


cdef void _svd_core(const double* X, int N, int n, double* work,
                    double* left, double* sigma, double* right) noexcept nogil:
    # X row-major N x n. left: k columns of length N; right: k columns of length n.
    cdef int r, c, i, j, k, key
    cdef bint transposed = N < n
    cdef double scale = 0.0, s
    cdef double* W
    cdef double* V
    cdef double* sig
    cdef int* order
    cdef double* cand
    cdef double* U
    cdef double* e
    for i in range(N * n):
        if fabs(X[i]) > scale:
            scale = fabs(X[i])
    if transposed:
        r = n
        c = N
    else:
        r = N
        c = n
    W = work
    V = W + r * c
    sig = V + c * c
    cand = sig + c
    U = cand + r * c
    e = U + r * c
    order = <int*> (e + r)
    if transposed:
        for j in range(N):
            for k in range(n):
                W[j * r + k] = X[j * n + k]
    else:
        for j in range(n):
            for k in range(N):
                W[j * r + k] = X[k * n + j]
    if scale > 0.0:
        for i in range(r * c):
            W[i] = W[i] / scale
    _jacobi(W, r, c, V)
    for j in range(c):
        s = 0.0
        for k in range(r):
            s += W[j * r + k] * W[j * r + k]
        sig[j] = sqrt(s)
    for j in range(c):
        order[j] = j
    for i in range(1, c):
        key = order[i]
        j = i - 1
        while j >= 0 and sig[order[j]] < sig[key]:
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = key
    for i in range(c):
        j = order[i]
        s = sig[j]
        for k in range(r):
            if s > 0.0:
                cand[i * r + k] = W[j * r + k] / s
            else:
                cand[i * r + k] = 0.0
    _orthonormalize(cand, c, r, U, e)
    for i in range(c):
        j = order[i]
        sigma[i] = sig[j] * scale
        if transposed:
            for k in range(c):
                left[i * c + k] = V[j * c + k]
            for k in range(r):
                right[i * r + k] = U[i * r + k]
        else:
            for k in range(r):
                left[i * r + k] = U[i * r + k]
            for k in range(c):
                right[i * c + k] = V[j * c + k]


cdef inline int _work_size(int N, int n):
    cdef int r = N if N > n else n
    cdef int c = n if N > n else N
    # W, V, sig, cand, U, e, order (ints stored in double slots)
    return r * c + c * c + c + 2 * r * c + r + c + 1


def svd(X):
    """Thin SVD of a 2-D float array: ``(U, sigma, V)`` with ``X = U diag(sigma) V^T``."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] A = np.ascontiguousarray(X, dtype=float)
    cdef int N = A.shape[0]
    cdef int n = A.shape[1]
    cdef int k = N if N < n else n
    cdef cnp.ndarray[double, ndim=1] work = np.empty(_work_size(N, n))
    cdef cnp.ndarray[double, ndim=2, mode="c"] left = np.empty((k, N))
    cdef cnp.ndarray[double, ndim=1] sigma = np.empty(k)
    cdef cnp.ndarray[double, ndim=2, mode="c"] right = np.empty((k, n))
    _svd_core(&A[0, 0], N, n, &work[0], &left[0, 0], &sigma[0], &right[0, 0])
    return left.T.copy(), sigma, right.T.copy()


def batch_projections(Xs, double rel_tol, double abs_tol):
    """Range projections for a stack ``Xs`` of shape (M, N, n).

    Returns ``(par, rank, sigma)`` with shapes (M, N, N), (M,), (M, min(N, n)).
    """
    cdef cnp.ndarray[double, ndim=3, mode="c"] A = np.ascontiguousarray(Xs, dtype=float)
    cdef Py_ssize_t M = A.shape[0]
    cdef int N = A.shape[1]
    cdef int n = A.shape[2]
    cdef int k = N if N < n else n
    cdef cnp.ndarray[double, ndim=3, mode="c"] par = np.zeros((M, N, N))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rank = np.zeros(M, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] sigma = np.zeros((M, k))
    if M == 0:
        return par, rank, sigma
    cdef int wsize = _work_size(N, n)
    cdef double* work = <double*> malloc(wsize * sizeof(double))
    cdef double* left = <double*> malloc(k * N * sizeof(double))
    cdef double* right = <double*> malloc(k * n * sizeof(double))
    cdef Py_ssize_t m
    cdef int q, a, b, rk
    cdef double thresh
    if work == NULL or left == NULL or right == NULL:
        free(work)
        free(left)
        free(right)
        raise MemoryError()
    try:
        with nogil:
            for m in range(M):
                _svd_core(&A[m, 0, 0], N, n, work, left, &sigma[m, 0], right)
                thresh = rel_tol * sigma[m, 0] + abs_tol
                rk = 0
                for q in range(k):
                    if sigma[m, q] > thresh:
                        rk += 1
                for q in range(rk):
                    for a in range(N):
                        for b in range(N):
                            par[m, a, b] += left[q * N + a] * left[q * N + b]
                rank[m] = rk
    finally:
        free(work)
        free(left)
        free(right)
    return par, rank, sigma
