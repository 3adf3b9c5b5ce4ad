"""Small dense-matrix kernels: SVD, numerical rank, range projections, Gram solves.

Matrices are ``numpy`` arrays of shape (N, n): N target components, n
spatial directions. Batched variants take a leading stack axis.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import NonFiniteError, SingularGramError


@dataclass(frozen=True)
class RankPolicy:
    """Singular values strictly above ``rel_tol * sigma_max + abs_tol`` count toward rank.

    For finite-difference jets a relative tolerance around ``1e-4 * h`` is a
    sensible starting point, since truncation error swamps machine noise.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12

    def __post_init__(self):
        if not (self.rel_tol >= 0 and self.abs_tol >= 0):
            raise ValueError("rank tolerances must be nonnegative")
        if not (np.isfinite(self.rel_tol) and np.isfinite(self.abs_tol)):
            raise ValueError("rank tolerances must be finite")

    def threshold(self, sigma_max):
        return self.rel_tol * sigma_max + self.abs_tol

    def as_dict(self):
        return {"rel_tol": self.rel_tol, "abs_tol": self.abs_tol}


DEFAULT_POLICY = RankPolicy()


@dataclass(frozen=True)
class ProjectionPair:
    par: np.ndarray
    perp: np.ndarray
    rank: int
    singular_values: np.ndarray = field(repr=False)


def check_finite(X, name="matrix"):
    X = np.asarray(X, dtype=float)
    bad = ~np.isfinite(X)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteError(f"{name} has non-finite entry {X[idx]!r} at index {idx}")
    return X


def _as_matrix(X):
    X = check_finite(X)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {X.shape}")
    return X


def svd_small(X):
    """Thin SVD by one-sided Jacobi rotations.

    Returns ``(U, sigma, V)`` with ``U`` (N x k), ``V`` (n x k), ``k = min(N, n)``,
    orthonormal columns and ``sigma`` nonincreasing.
    """
    X = _as_matrix(X)
    return _backend.get().svd(X)


def numerical_rank(X, policy=DEFAULT_POLICY):
    _, sigma, _ = svd_small(X)
    return int(np.count_nonzero(sigma > policy.threshold(sigma[0])))


def _snap_full(par, rank):
    # full range: the complement is exactly empty, not rounding noise
    if rank == par.shape[0]:
        return np.eye(par.shape[0])
    return par


def projections(X, policy=DEFAULT_POLICY):
    """Orthogonal projections onto the range of ``X`` and onto its complement."""
    X = _as_matrix(X)
    par, rank, sigma = _backend.get().batch_projections(X[None], policy.rel_tol, policy.abs_tol)
    par = _snap_full(par[0], rank[0])
    perp = np.eye(X.shape[0]) - par
    return ProjectionPair(par=par, perp=perp, rank=int(rank[0]), singular_values=sigma[0])


def projections_batch(Xs, policy=DEFAULT_POLICY):
    """Stacked ``projections``: ``Xs`` has shape (..., N, n).

    Returns ``(par, perp, rank, sigma)`` arrays with the same leading shape.
    """
    Xs = check_finite(Xs)
    lead = Xs.shape[:-2]
    N, n = Xs.shape[-2:]
    flat = Xs.reshape((-1, N, n))
    par, rank, sigma = _backend.get().batch_projections(flat, policy.rel_tol, policy.abs_tol)
    par[rank == N] = np.eye(N)
    par = par.reshape(lead + (N, N))
    perp = np.eye(N) - par
    return par, perp, rank.reshape(lead), sigma.reshape(lead + (min(N, n),))


def gram_solve(Du, rhs, policy=DEFAULT_POLICY):
    """Solve ``(Du^T Du) x = rhs`` for n = 2 with the cofactor/determinant inverse."""
    Du = _as_matrix(Du)
    rhs = check_finite(rhs, "rhs").reshape(-1)
    if Du.shape[1] != 2 or rhs.shape != (2,):
        raise ValueError("gram_solve needs a 2-column Du and a 2-vector rhs")
    G = Du.T @ Du
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if det <= policy.abs_tol**2:
        raise SingularGramError(f"Gram determinant {det:.3e} is at or below abs_tol^2")
    # cof(G)^T for a 2x2 matrix
    adj = np.array([[G[1, 1], -G[0, 1]], [-G[1, 0], G[0, 0]]])
    return adj @ rhs / det


def principal_angle(B1, B2):
    """Largest principal angle between the column spans of orthonormal ``B1`` and ``B2``.

    Computed from the sine (norm of the part of ``B2`` outside span ``B1``)
    and the cosine together, so small angles keep full relative accuracy.
    """
    B1 = np.atleast_2d(np.asarray(B1, dtype=float))
    B2 = np.atleast_2d(np.asarray(B2, dtype=float))
    if B1.shape[1] != B2.shape[1]:
        raise ValueError("principal_angle compares subspaces of equal dimension")
    resid = B2 - B1 @ (B1.T @ B2)
    s = np.linalg.norm(resid, 2)
    c = np.linalg.svd(B1.T @ B2, compute_uv=False).min()
    return float(np.arctan2(s, c))
