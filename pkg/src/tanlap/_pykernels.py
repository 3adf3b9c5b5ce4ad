"""Pure-Python kernels: one-sided Jacobi SVD and batched range projections.

This module mirrors ``_kernels.pyx`` operation for operation, so both
backends return bit-identical results on IEEE doubles.
"""

import math

import numpy as np

NAME = "python"

_ORTH_TOL = 1e-15
_MAX_SWEEPS = 60


def _jacobi(W, r, c):
    """Orthogonalize the ``c`` columns (length ``r``) of ``W`` in place.

    Returns the accumulated right rotation as a list of ``c`` columns.
    """
    V = [[1.0 if i == j else 0.0 for i in range(c)] for j in range(c)]
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for i in range(c - 1):
            for j in range(i + 1, c):
                wi = W[i]
                wj = W[j]
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(r):
                    alpha += wi[k] * wi[k]
                    beta += wj[k] * wj[k]
                    gamma += wi[k] * wj[k]
                if gamma == 0.0 or abs(gamma) <= _ORTH_TOL * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = 1.0 / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                    if zeta < 0.0:
                        t = -t
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                for k in range(r):
                    a = wi[k]
                    b = wj[k]
                    wi[k] = cs * a - sn * b
                    wj[k] = sn * a + cs * b
                vi = V[i]
                vj = V[j]
                for k in range(c):
                    a = vi[k]
                    b = vj[k]
                    vi[k] = cs * a - sn * b
                    vj[k] = sn * a + cs * b
        if not rotated:
            break
    return V


def _orthonormalize(cols, r):
    """Modified Gram-Schmidt in the given order, completing null columns."""
    out = []
    for v in cols:
        v = list(v)
        for u in out:
            d = 0.0
            for k in range(r):
                d += u[k] * v[k]
            for k in range(r):
                v[k] -= d * u[k]
        nrm = 0.0
        for k in range(r):
            nrm += v[k] * v[k]
        nrm = math.sqrt(nrm)
        if nrm <= 0.5:
            best = None
            best_nrm = -1.0
            for q in range(r):
                e = [0.0] * r
                e[q] = 1.0
                for u in out:
                    d = u[q]
                    for k in range(r):
                        e[k] -= d * u[k]
                en = 0.0
                for k in range(r):
                    en += e[k] * e[k]
                en = math.sqrt(en)
                if en > best_nrm:
                    best = e
                    best_nrm = en
            v = best
            nrm = best_nrm
        out.append([x / nrm for x in v])
    return out


def _svd_cols(rows):
    """SVD of a row-major matrix given as nested lists.

    Returns ``(left, sigma, right)`` with singular vectors as lists of
    columns, sigma nonincreasing.
    """
    N = len(rows)
    n = len(rows[0])
    scale = 0.0
    for row in rows:
        for x in row:
            if abs(x) > scale:
                scale = abs(x)
    transposed = N < n
    if transposed:
        r, c = n, N
        W = [[rows[j][k] for k in range(n)] for j in range(N)]
    else:
        r, c = N, n
        W = [[rows[k][j] for k in range(N)] for j in range(n)]
    if scale > 0.0:
        for col in W:
            for k in range(r):
                col[k] = col[k] / scale
    V = _jacobi(W, r, c)
    sig = []
    for col in W:
        s = 0.0
        for k in range(r):
            s += col[k] * col[k]
        sig.append(math.sqrt(s))
    order = sorted(range(c), key=lambda j: -sig[j])
    cand = []
    for j in order:
        s = sig[j]
        if s > 0.0:
            cand.append([x / s for x in W[j]])
        else:
            cand.append([0.0] * r)
    U = _orthonormalize(cand, r)
    Vs = [V[j] for j in order]
    sigma = [sig[j] * scale for j in order]
    if transposed:
        return Vs, sigma, U
    return U, sigma, Vs


def svd(X):
    """Thin SVD of a 2-D float array: ``(U, sigma, V)`` with ``X = U diag(sigma) V^T``."""
    X = np.asarray(X, dtype=float)
    left, sigma, right = _svd_cols(X.tolist())
    return (
        np.array(left, dtype=float).T,
        np.array(sigma, dtype=float),
        np.array(right, dtype=float).T,
    )


def batch_projections(Xs, rel_tol, abs_tol):
    """Range projections for a stack ``Xs`` of shape (M, N, n).

    Returns ``(par, rank, sigma)`` with shapes (M, N, N), (M,), (M, min(N, n)).
    """
    Xs = np.asarray(Xs, dtype=float)
    M, N, n = Xs.shape
    k = min(N, n)
    par = np.zeros((M, N, N))
    rank = np.zeros(M, dtype=np.int64)
    sigma = np.zeros((M, k))
    for m, rows in enumerate(Xs.tolist()):
        left, sig, _ = _svd_cols(rows)
        thresh = rel_tol * sig[0] + abs_tol
        rk = 0
        for s in sig:
            if s > thresh:
                rk += 1
        P = [[0.0] * N for _ in range(N)]
        for q in range(rk):
            u = left[q]
            for a in range(N):
                for b in range(N):
                    P[a][b] += u[a] * u[b]
        par[m] = P
        rank[m] = rk
        sigma[m] = sig
    return par, rank, sigma
