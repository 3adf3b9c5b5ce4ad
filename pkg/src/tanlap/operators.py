"""Pointwise differential operators on second-order jets.

Every operator accepts a ``Jet2`` with any batch shape and returns arrays
with the same leading shape. Conventions: ``grad[..., a, i] = d_i u_a`` and
``hess[..., a, i, j] = d_i d_j u_a``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import PreconditionError, RankMismatchError, SingularGramError
from .linalg import DEFAULT_POLICY, gram_solve, projections_batch, svd_small

INF = math.inf


def laplacian(jet):
    """Trace of the Hessian over the spatial indices, shape (..., N)."""
    return np.trace(jet.hess, axis1=-2, axis2=-1)


def grad_contraction(jet):
    """Du (x) Du : D^2u, i.e. sum over b, i, j of Du_ai Du_bj D_ij u_b."""
    g = jet.grad
    return np.einsum("...ai,...bj,...bij->...a", g, g, jet.hess)


def grad_norm_sq(jet):
    return np.sum(jet.grad**2, axis=(-2, -1))


def _split(jet, policy):
    par, perp, _, _ = projections_batch(jet.grad, policy)
    lap = laplacian(jet)
    return (np.einsum("...ab,...b->...a", par, lap),
            np.einsum("...ab,...b->...a", perp, lap), lap)


def tangential_residual(jet, policy=DEFAULT_POLICY):
    """Normal part of the Laplacian: perp(Du) applied to Delta u."""
    return _split(jet, policy)[1]


def tension_field(jet, policy=DEFAULT_POLICY):
    """Tangential part of the Laplacian: par(Du) applied to Delta u."""
    return _split(jet, policy)[0]


def _check_p(p):
    p = float(p)
    if math.isnan(p) or p < 2:
        raise PreconditionError(f"p must satisfy p >= 2, got {p}")
    return p


def p_laplace_residual(jet, p):
    """Expanded p-Laplacian Du(x)Du:D^2u + |Du|^2/(p-2) Delta u for finite p > 2.

    At p = 2 the divergence form reduces to Delta u, which is returned directly.
    """
    p = _check_p(p)
    if math.isinf(p):
        raise PreconditionError("p = inf has no expanded p-Laplacian; use inf_laplace_residual")
    lap = laplacian(jet)
    if p == 2.0:
        return lap
    return grad_contraction(jet) + (grad_norm_sq(jet) / (p - 2.0))[..., None] * lap


def inf_laplace_residual(jet, policy=DEFAULT_POLICY):
    """Infinity-Laplacian (Du(x)Du + |Du|^2 perp(x)I) : D^2u in index form.

    Assembles the full coefficient tensor and contracts it with the Hessian,
    independently of ``decomposition_pair``.
    """
    g = jet.grad
    n = g.shape[-1]
    _, perp, _, _ = projections_batch(g, policy)
    coeff = (np.einsum("...ai,...bj->...aibj", g, g)
             + grad_norm_sq(jet)[..., None, None, None, None]
             * np.einsum("...ab,ij->...aibj", perp, np.eye(n)))
    return np.einsum("...aibj,...bij->...a", coeff, jet.hess)


def decomposition_pair(jet, p, policy=DEFAULT_POLICY):
    """The two mutually orthogonal systems whose sum is the (rescaled) p-Laplacian.

    First: Du(x)Du:D^2u + |Du|^2/(p-2) par Delta u (p finite), or
    Du(x)Du:D^2u (p = inf). Second: |Du|^2 perp Delta u. At p = 2 the first
    component is multiplied through by (p - 2), leaving |Du|^2 par Delta u.
    """
    p = _check_p(p)
    par_lap, perp_lap, _ = _split(jet, policy)
    w = grad_norm_sq(jet)[..., None]
    second = w * perp_lap
    if math.isinf(p):
        first = grad_contraction(jet)
    elif p == 2.0:
        first = w * par_lap
    else:
        first = grad_contraction(jet) + w / (p - 2.0) * par_lap
    return first, second


def normalized_norm(r, jet):
    """|r| / ((1 + |Du|^2)(1 + |D^2u|)) with Frobenius norms, per point."""
    r = np.asarray(r)
    scale = (1.0 + grad_norm_sq(jet)) * (1.0 + np.sqrt(np.sum(jet.hess**2, axis=(-3, -2, -1))))
    return np.linalg.norm(r, axis=-1) / scale


@dataclass(frozen=True)
class AField:
    """Coefficient vector with Delta u = Du . value on the branch taken.

    ``candidates`` maps branch names to defects when the rank decision was
    close (sigma_2 within 10x of the threshold); ``fallback`` marks a rank-2
    decision that hit a singular Gram matrix and dropped to the rank-1 formula.
    """

    value: np.ndarray
    branch: str
    defect: float
    fallback: bool = False
    candidates: dict = field(default_factory=dict)
    nullspace_dim: int = 0


def _rank1_coeff(Du, lap):
    M = Du @ Du.T
    nrm2 = float(np.sum(M * M))
    if nrm2 == 0.0:
        return np.zeros(Du.shape[1])
    return (lap @ (M / nrm2)) @ Du


def a_field(jet, policy=DEFAULT_POLICY):
    """Representative coefficient vector for a single n = 2 jet."""
    Du = np.asarray(jet.grad, dtype=float)
    if Du.ndim != 2:
        raise PreconditionError("a_field takes a single-point jet; use a_field_batch for stacks")
    if Du.shape[1] != 2:
        raise PreconditionError(f"a_field needs n = 2, got n = {Du.shape[1]}")
    lap = laplacian(jet)
    _, sigma, _ = svd_small(Du)
    thr = policy.threshold(sigma[0])
    rank = int(np.count_nonzero(sigma > thr))

    def rank2():
        return gram_solve(Du, Du.T @ lap, policy)

    def defect(A):
        return float(np.linalg.norm(lap - Du @ A))

    fallback = False
    if rank >= 2:
        try:
            value, branch = rank2(), "rank2"
        except SingularGramError:
            value, branch, fallback = _rank1_coeff(Du, lap), "rank1", True
    elif rank == 1:
        value, branch = _rank1_coeff(Du, lap), "rank1"
    else:
        value, branch = np.zeros(2), "rank0"

    candidates = {}
    if len(sigma) > 1 and sigma[1] <= 10.0 * thr and sigma[1] > thr / 10.0:
        candidates["rank1"] = defect(_rank1_coeff(Du, lap))
        try:
            candidates["rank2"] = defect(rank2())
        except SingularGramError:
            candidates["rank2"] = None
    effective = {"rank2": 2, "rank1": 1, "rank0": 0}[branch]
    return AField(value=value, branch=branch, defect=defect(value), fallback=fallback,
                  candidates=candidates, nullspace_dim=2 - effective)


def a_field_batch(jet, policy=DEFAULT_POLICY):
    """``a_field`` over every point of a batched jet.

    Returns (values (..., 2), branches (...) as strings, defects (...)).
    """
    flat = jet.flatten()
    fields = [a_field(flat[k], policy) for k in range(len(flat))]
    lead = jet.batch_shape
    values = np.array([f.value for f in fields]).reshape(lead + (2,))
    branches = np.array([f.branch for f in fields]).reshape(lead)
    defects = np.array([f.defect for f in fields]).reshape(lead)
    return values, branches, defects


@dataclass(frozen=True)
class RankOneFactor:
    """Du = xi (x) a with |a| = 1; the magnitude is carried by ``xi``."""

    xi: np.ndarray
    a: np.ndarray
    sigma_absorbed: bool = True


def rank_one_factor(jet_or_grad, policy=DEFAULT_POLICY):
    """Factor a rank-one gradient; the first nonzero entry of ``a`` is positive."""
    Du = getattr(jet_or_grad, "grad", jet_or_grad)
    Du = np.asarray(Du, dtype=float)
    if Du.ndim != 2:
        raise PreconditionError("rank_one_factor takes a single gradient matrix")
    U, sigma, V = svd_small(Du)
    rank = int(np.count_nonzero(sigma > policy.threshold(sigma[0])))
    if rank != 1:
        raise RankMismatchError(f"rank_one_factor needs numerical rank 1, got {rank}")
    xi = sigma[0] * U[:, 0]
    a = V[:, 0]
    lead = np.flatnonzero(np.abs(a) > 1e-12)[0]
    if a[lead] < 0:
        xi, a = -xi, -a
    return RankOneFactor(xi=xi, a=a)
