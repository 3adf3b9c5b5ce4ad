"""Integrating-factor machinery for separated maps u(x, y) = f(x) + g(y).

For a solution, f'' + g'' = a f' + b g' pointwise. Integrating this twice
(first in x, then in y, and symmetrically) yields identities tying g'(y)
and f'(x) to the derivatives at a base point through ten nested integrals
A..J. This module evaluates those integrals by composite trapezoid
quadrature and measures how well the identities hold.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import DegenerateCoefficientsError, PathDegeneracyError, PreconditionError
from .linalg import DEFAULT_POLICY, gram_solve, projections_batch, svd_small

MIN_NODES = 8
CLOSENESS = 10.0


@dataclass(frozen=True)
class SeparatedCoeffs:
    """Coefficients with f'' + g'' = a f' + b g' at one point, plus diagnostics."""

    a: float
    b: float
    conditioning: float
    residual: float
    quotient_a: float
    quotient_b: float

    @property
    def quotient_gap(self):
        return max(abs(self.a - self.quotient_a), abs(self.b - self.quotient_b))


def _derivatives(sep, x, y):
    fp, gp = sep.f.d1(x), sep.g.d1(y)
    return fp, gp, sep.f.d2(x) + sep.g.d2(y)


def _annihilated_ratio(keep, kill, rhs):
    # apply |kill|^2 I - kill kill^T to rhs and keep, then take the parallel ratio
    P = kill @ kill * np.eye(len(kill)) - np.outer(kill, kill)
    num, den = P @ rhs, P @ keep
    return float(num @ den / (den @ den))


def separated_coeffs(sep, x, y, policy=DEFAULT_POLICY):
    """Least-squares a, b at (x, y), cross-checked against the annihilator quotients."""
    if not sep.contains(x, y):
        raise PreconditionError(f"({x}, {y}) is not inside the open rectangle of the map")
    fp, gp, rhs = _derivatives(sep, float(x), float(y))
    Du = np.stack([fp, gp], axis=1)
    _, sigma, _ = svd_small(Du)
    if np.count_nonzero(sigma > policy.threshold(sigma[0])) < 2:
        raise DegenerateCoefficientsError(
            f"[f'(x) | g'(y)] has rank < 2 at ({x}, {y}); a and b are not determined")
    a, b = gram_solve(Du, Du.T @ rhs, policy)
    resid = float(np.linalg.norm(rhs - a * fp - b * gp))
    return SeparatedCoeffs(a=float(a), b=float(b), conditioning=float(sigma[-1]), residual=resid,
                           quotient_a=_annihilated_ratio(fp, gp, rhs),
                           quotient_b=_annihilated_ratio(gp, fp, rhs))


def coefficient_grid(sep, s, t, policy=DEFAULT_POLICY):
    """Vectorized least-squares a, b on the tensor grid s x t (shape (len(s), len(t))).

    Raises ``PathDegeneracyError`` at the first node (raster order) of rank < 2.
    """
    fp = sep.f.d1(s)[:, None, :]
    gp = sep.g.d1(t)[None, :, :]
    rhs = sep.f.d2(s)[:, None, :] + sep.g.d2(t)[None, :, :]
    fp, gp = np.broadcast_arrays(fp, gp)
    _, _, rank, _ = projections_batch(np.stack([fp, gp], axis=-1), policy)
    if (rank < 2).any():
        i, j = np.argwhere(rank < 2)[0]
        raise PathDegeneracyError(f"coefficients degenerate along the integration path at "
                                  f"node ({float(s[i])!r}, {float(t[j])!r}): rank {int(rank[i, j])}")
    g11 = np.sum(fp * fp, axis=-1)
    g12 = np.sum(fp * gp, axis=-1)
    g22 = np.sum(gp * gp, axis=-1)
    r1 = np.sum(fp * rhs, axis=-1)
    r2 = np.sum(gp * rhs, axis=-1)
    det = g11 * g22 - g12 * g12
    return (g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det


@dataclass(frozen=True)
class BasePoint:
    x0: float
    y0: float


@dataclass(frozen=True)
class IntegralFactors:
    A: float
    B: float
    C: float
    D: float
    E: float
    F: float
    G: float
    H: float
    I: float
    J: float
    m: int
    x: float = field(default=0.0)
    y: float = field(default=0.0)
    base: BasePoint = field(default=None)

    def as_dict(self):
        return {k: getattr(self, k) for k in "ABCDEFGHIJ"}

    def sign_checks(self):
        """Each documented sign property, True when it holds."""
        dx = self.x - self.base.x0
        dy = self.y - self.base.y0
        checks = {"A": np.sign(self.A) == np.sign(dx), "F": np.sign(self.F) == np.sign(dy),
                  "C": self.C > 0, "H": self.H > 0}
        if dx * dy < 0:
            checks["I"] = self.I < 0
        return {k: bool(v) for k, v in checks.items()}


def _check_query(sep, base, x, y, m):
    if int(m) != m or m < MIN_NODES:
        raise PreconditionError(f"m must be an integer >= {MIN_NODES}, got {m}")
    if not sep.contains(base.x0, base.y0):
        raise PreconditionError("the base point must lie strictly inside the rectangle")
    if not sep.contains(x, y):
        raise PreconditionError(f"query ({x}, {y}) must lie strictly inside the rectangle")
    for name, d, (lo, hi) in (("x", x - base.x0, sep.x_interval), ("y", y - base.y0, sep.y_interval)):
        if abs(d) < CLOSENESS / m * (hi - lo):
            raise PreconditionError(
                f"|{name} - {name}0| = {abs(d):.3g} is below {CLOSENESS:g}/m times the interval "
                f"length; the 1/A and 1/F integrands are not resolved there")


def integral_factors(sep, base, x, y, m=128, policy=DEFAULT_POLICY):
    """All ten factors at query (x, y) by composite trapezoid on shared m-interval grids."""
    x, y, m = float(x), float(y), int(m)
    _check_query(sep, base, x, y, m)
    s = np.linspace(base.x0, x, m + 1)
    t = np.linspace(base.y0, y, m + 1)
    a, b = coefficient_grid(sep, s, t, policy)

    def cum(vals, nodes, axis):
        return cumulative_trapezoid(vals, nodes, axis=axis, initial=0.0)

    # x-first integration: mu(s, t) = exp(-int_{x0}^s a(., t))
    mu = np.exp(-cum(a, s, 0))
    A = cum(mu, s, 0)[-1]
    B = cum(b * mu, s, 0)[-1]
    rho = np.exp(-cum(B / A, t, 0))
    C = rho[-1]
    D = trapezoid(mu[-1] / A * rho, t)
    E = trapezoid(rho / A, t)
    # y-first integration: kappa(s, t) = exp(-int_{y0}^t b(s, .))
    kappa = np.exp(-cum(b, t, 1))
    F = cum(kappa, t, 1)[:, -1]
    G = cum(a * kappa, t, 1)[:, -1]
    delta = np.exp(-cum(G / F, s, 0))
    H = delta[-1]
    I = trapezoid(kappa[:, -1] / F * delta, s)
    J = trapezoid(delta / F, s)
    return IntegralFactors(A=float(A[-1]), B=float(B[-1]), C=float(C), D=float(D), E=float(E),
                           F=float(F[-1]), G=float(G[-1]), H=float(H), I=float(I), J=float(J),
                           m=m, x=x, y=y, base=base)


@dataclass(frozen=True)
class IdentityResidual:
    """Residuals of the integrated identities at one query point.

    ``x_first`` is the x-first identity and ``y_first`` its mirror.
    ``elimination`` is the stated elimination of f'(x) between them,
    |(C - I/H) g'(y) - (E - D/H) f'(x0) - (1 + J/H) g'(y0)|; it is None when
    (x - x0)(y - y0) >= 0, with the reason in ``elimination_status``.

    Substituting the mirror identity into the x-first one gives instead
    (C - D I/H) g'(y) = (E - D/H) f'(x0) + (1 - D J/H) g'(y0), whose residual
    is ``substitution_residual``. ``proportionality`` is the largest of its three
    coefficients: when it tends to 0 the two identities are the same relation
    up to the factor D/H and the elimination carries no information.
    """

    x_first: float
    y_first: float
    elimination: float
    elimination_status: str
    substitution_residual: float
    proportionality: float
    factors: IntegralFactors

    def as_dict(self):
        return {"x_first": self.x_first, "y_first": self.y_first,
                "elimination": self.elimination, "elimination_status": self.elimination_status,
                "substitution_residual": self.substitution_residual,
                "proportionality": self.proportionality,
                "factors": self.factors.as_dict(), "signs": self.factors.sign_checks()}


def elimination_coefficients(fac):
    """Coefficients of g'(y), f'(x0), g'(y0) after substituting one identity into the other."""
    C, D, E, H, I, J = fac.C, fac.D, fac.E, fac.H, fac.I, fac.J
    return C - D * I / H, E - D / H, 1 - D * J / H


def identity_residual(sep, base, x, y, m=128, policy=DEFAULT_POLICY):
    fac = integral_factors(sep, base, x, y, m, policy)
    f0, g0 = sep.f.d1(base.x0), sep.g.d1(base.y0)
    fx, gy = sep.f.d1(x), sep.g.d1(y)
    C, D, E, H, I, J = fac.C, fac.D, fac.E, fac.H, fac.I, fac.J
    x_first = np.linalg.norm(gy * C + fx * D - g0 - f0 * E)
    y_first = np.linalg.norm(fx * H + gy * I - f0 - g0 * J)
    if (x - base.x0) * (y - base.y0) < 0:
        elimination = float(np.linalg.norm((C - I / H) * gy - (E - D / H) * f0 - (1 + J / H) * g0))
        status = "ok"
    else:
        elimination = None
        status = "precondition: (x - x0)(y - y0) must be negative"
    cg, cf, c0 = elimination_coefficients(fac)
    elim = float(np.linalg.norm(cg * gy - cf * f0 - c0 * g0))
    return IdentityResidual(x_first=float(x_first), y_first=float(y_first), elimination=elimination,
                            elimination_status=status, substitution_residual=elim,
                            proportionality=float(max(abs(cg), abs(cf), abs(c0))),
                            factors=fac)


def sample_points(sep, count, seed=0, margin=0.05):
    """Seeded uniform samples in the rectangle shrunk by ``margin`` of each side."""
    rng = np.random.default_rng(seed)
    (a, b), (c, d) = sep.x_interval, sep.y_interval
    xs = rng.uniform(a + margin * (b - a), b - margin * (b - a), count)
    ys = rng.uniform(c + margin * (d - c), d - margin * (d - c), count)
    return np.stack([xs, ys], axis=1)


@dataclass(frozen=True)
class SpanReport:
    span_dim: int
    label: str
    max_distance: float
    image_distance: float
    image_diameter: float
    distances: np.ndarray = field(repr=False)
    proportionality: list
    tol: float
    passed: bool

    def as_dict(self):
        return {"span_dim": self.span_dim, "label": self.label, "tol": self.tol,
                "max_derivative_distance": self.max_distance,
                "max_image_distance": self.image_distance, "image_diameter": self.image_diameter,
                "distances": self.distances.tolist(), "proportionality": self.proportionality,
                "verdict": "pass" if self.passed else "fail"}


def span_check(sep, base, samples, m=None, tol=1e-10, policy=DEFAULT_POLICY):
    """Distance of f'(x), g'(y) and of u(x, y) - u(x0, y0) from span{f'(x0), g'(y0)}.

    With ``m`` given, samples with (x - x0)(y - y0) < 0 that are not too
    close to the base point also record the proportionality diagnostic of
    ``identity_residual``.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    f0, g0 = sep.f.d1(base.x0), sep.g.d1(base.y0)
    U, sigma, _ = svd_small(np.stack([f0, g0], axis=1))
    dim = int(np.count_nonzero(sigma > policy.threshold(sigma[0])))
    basis = U[:, :dim]

    def dist(v):
        v = np.atleast_2d(v)
        return np.linalg.norm(v - (v @ basis) @ basis.T, axis=-1)

    xs, ys = samples[:, 0], samples[:, 1]
    d = np.maximum(dist(sep.f.d1(xs)), dist(sep.g.d1(ys)))
    u0 = sep(base.x0, base.y0)
    images = sep.f(xs) + sep.g(ys)
    img_dist = float(dist(images - u0).max())
    spread = images.max(axis=0) - images.min(axis=0)
    diam = float(np.linalg.norm(spread))
    props = []
    if m is not None:
        for x, y in samples:
            if (x - base.x0) * (y - base.y0) >= 0:
                continue
            try:
                fac = integral_factors(sep, base, x, y, m, policy)
            except PreconditionError:
                continue
            props.append([float(x), float(y),
                          float(max(abs(c) for c in elimination_coefficients(fac)))])
    max_d = float(d.max())
    passed = max_d <= tol and img_dist <= tol * (1.0 + diam)
    return SpanReport(span_dim=dim, label="plane" if dim == 2 else "line" if dim == 1 else "point",
                      max_distance=max_d, image_distance=img_dist, image_diameter=diam,
                      distances=d, proportionality=props, tol=tol, passed=bool(passed))
