"""L^p minimality of solutions under perturbations normal to their image.

A trial perturbation is a bump ``phi`` times the normal projection of a
fixed direction ``w``; its gradient is differenced on the lattice. Energies
are L^p norms of |Du + eps Dnu| with trapezoid weights (p finite) or lattice
maxima (p = inf).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (ConstantRankError, DegenerateDirectionError, DomainError,
                     PreconditionError)
from .linalg import DEFAULT_POLICY, projections_batch
from .operators import normalized_norm, tangential_residual

STRICT_TOL = 1e-12
SOLUTION_TOL = 1e-8
DEFAULT_EPS = (-0.2, -0.1, -0.05, 0.05, 0.1, 0.2)


def _trapezoid_weights(box):
    w = None
    for a, b, r in zip(box.lower, box.upper, box.resolution):
        h = (b - a) / (r - 1)
        w1 = np.full(r, h)
        w1[[0, -1]] = h / 2
        w = w1 if w is None else np.multiply.outer(w, w1)
    return w


@dataclass(frozen=True)
class Subdomain:
    """A box compactly inside the source's box, with product-trapezoid weights."""

    box: object
    weights: np.ndarray = field(repr=False)

    @classmethod
    def inside(cls, source, box):
        if box.ndim != source.n:
            raise DomainError(f"subdomain has {box.ndim} axes, the source lives on R^{source.n}")
        if not box.strictly_inside(source.domain):
            raise DomainError(f"subdomain {box.as_dict()} is not strictly inside "
                              f"{source.domain.as_dict()}")
        source.check_domain(box)
        return cls(box, _trapezoid_weights(box))

    @property
    def spacing(self):
        return max(self.box.spacing)


@dataclass(frozen=True)
class NormalField:
    values: np.ndarray = field(repr=False)
    grads: np.ndarray = field(repr=False)
    boundary_zero: bool
    direction: np.ndarray
    shape: dict
    normality_defect: float


def _source_grads(source, sub, policy):
    pts = sub.box.lattice()
    jet = source.jets(pts)
    _, perp, rank, _ = projections_batch(jet.grad, policy)
    return jet, perp, rank


def bump(box, shape):
    """Scalar bump on the lattice of ``box``.

    ``{"kind": "sine", "modes": [k1, ...]}`` is the product of sin(k pi s) in
    normalized coordinates s and vanishes on the boundary;
    ``{"kind": "cosine", "modes": [...]}`` is the product of 1 + cos(k pi s) / 2,
    which does not; ``{"kind": "zero"}`` is identically zero.
    """
    kind = shape.get("kind", "sine")
    grids = np.meshgrid(*[np.linspace(0.0, 1.0, r) for r in box.resolution], indexing="ij")
    if kind == "zero":
        return np.zeros(box.resolution)
    modes = list(shape.get("modes", [1] * box.ndim))
    if len(modes) != box.ndim or any(int(k) < 1 for k in modes):
        raise PreconditionError(f"bump modes must be {box.ndim} positive integers, got {modes}")
    phi = np.ones(box.resolution)
    for s, k in zip(grids, modes):
        if kind == "sine":
            phi = phi * np.sin(k * math.pi * s)
        elif kind == "cosine":
            phi = phi * (1.0 + 0.5 * np.cos(k * math.pi * s))
        else:
            raise PreconditionError(f"unknown bump kind {kind!r}")
    return phi


def _boundary_mask(shape):
    mask = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[axis] = [0, -1]
        mask[tuple(idx)] = True
    return mask


def make_normal_field(source, sub, shape=None, policy=DEFAULT_POLICY, boundary_zero=True,
                      direction=None, seed=None, _cache=None):
    """Build nu = phi * perp(Du) w on the lattice of ``sub``, scaled so max |nu| = 1.

    ``direction`` fixes w; otherwise w is a seeded Gaussian direction.
    """
    shape = dict(shape or {"kind": "sine"})
    jet, perp, rank = _cache or _source_grads(source, sub, policy)
    if rank.min() != rank.max():
        raise ConstantRankError(f"gradient rank varies over the subdomain "
                                f"({int(rank.min())}..{int(rank.max())})")
    N = source.N
    if direction is None:
        w = np.random.default_rng(seed).standard_normal(N)
    else:
        w = np.asarray(direction, dtype=float)
        if w.shape != (N,):
            raise PreconditionError(f"direction must have {N} entries")
    w = w / np.linalg.norm(w)
    phi = bump(sub.box, shape)
    if boundary_zero:
        phi[_boundary_mask(phi.shape)] = 0.0
    normal = perp @ w
    if np.max(np.linalg.norm(normal, axis=-1)) <= 1e-12:
        raise DegenerateDirectionError("the direction is tangent to the image everywhere; "
                                       "choose another direction or seed")
    nu = phi[..., None] * normal
    peak = np.max(np.linalg.norm(nu, axis=-1))
    if peak > 0:
        nu = nu / peak
    grads = np.stack(np.gradient(nu, *sub.box.axes(), axis=tuple(range(sub.box.ndim))),
                     axis=-1) if peak > 0 else np.zeros(nu.shape + (sub.box.ndim,))
    par = np.eye(N) - perp
    mags = np.linalg.norm(nu, axis=-1)
    defect = float(np.max(np.linalg.norm(np.einsum("...ab,...b->...a", par, nu), axis=-1)
                          / (1.0 + mags)))
    return NormalField(values=nu, grads=grads, boundary_zero=bool(boundary_zero),
                       direction=w, shape=shape, normality_defect=defect)


def _lp_norm(mag, weights, p):
    if math.isinf(p):
        return float(mag.max())
    top = float(mag.max())
    if top == 0.0:
        return 0.0
    # scale before powering so large p does not overflow
    return top * float(np.sum(weights * (mag / top) ** p)) ** (1.0 / p)


def _check_p(p):
    p = float(p)
    if math.isnan(p) or p < 2:
        raise PreconditionError(f"p must satisfy p >= 2, got {p}")
    return p


def energy(source, field, epsilon, p, sub, policy=DEFAULT_POLICY, _grad=None):
    """L^p norm (or lattice maximum for p = inf) of |Du + epsilon Dnu| over ``sub``."""
    p = _check_p(p)
    if not math.isfinite(epsilon):
        raise PreconditionError("epsilon must be finite")
    Du = _grad if _grad is not None else source.jets(sub.box.lattice()).grad
    G = Du
    if field is not None and epsilon != 0.0:
        if field.grads.shape != Du.shape:
            raise PreconditionError("normal field lattice does not match the subdomain")
        G = Du + epsilon * field.grads
    mag = np.sqrt(np.sum(G**2, axis=(-2, -1)))
    return _lp_norm(mag, sub.weights, p)


@dataclass(frozen=True)
class VariationalReport:
    p: float
    base_energy: float
    eps_grid: list
    trials: list
    stationarity_derivative: float
    strict_violations: int
    slack: float
    verdict: str
    solution_residual: float

    @property
    def minimal(self):
        return self.verdict == "minimal"

    def as_dict(self):
        return {"p": "inf" if math.isinf(self.p) else self.p, "base_energy": self.base_energy,
                "eps_grid": list(self.eps_grid), "solution_residual": self.solution_residual,
                "stationarity_derivative": self.stationarity_derivative,
                "strict_violations": self.strict_violations, "slack": self.slack,
                "trials": self.trials, "verdict": self.verdict}


def _trial_plan(n, trials, seed, modes_for):
    rng = np.random.default_rng(seed)
    plan = []
    for t in range(trials):
        modes = [int(k) for k in rng.integers(1, 4, size=n)]
        plan.append({"trial": t, "seed": int(rng.integers(0, 2**31 - 1)),
                     "modes": modes_for(t, modes)})
    return plan


def minimality_check(source, sub, p, trials=20, eps_grid=DEFAULT_EPS, policy=DEFAULT_POLICY,
                     seed=0, direction=None, workers=1):
    """Sample normal perturbations and compare perturbed energies with the base.

    For finite p every trial vanishes on the boundary. For p = inf each trial
    is run twice: with a boundary-vanishing sine bump and with a nonvanishing
    cosine bump. ``direction`` fixes w for every trial (seeds then only vary
    the bump modes).
    """
    p = _check_p(p)
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid or any(e == 0.0 or not math.isfinite(e) for e in eps_grid):
        raise PreconditionError("eps_grid must hold finite nonzero values")
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    cache = _source_grads(source, sub, policy)
    jet = cache[0]
    resid = float(np.max(normalized_norm(tangential_residual(jet, policy), jet)))
    h = sub.spacing
    slack = STRICT_TOL + 10.0 * h * h
    if resid > SOLUTION_TOL:
        return VariationalReport(p, energy(source, None, 0.0, p, sub, _grad=jet.grad), eps_grid,
                                 [], float("nan"), 0, slack, "non-solution-input", resid)
    base = energy(source, None, 0.0, p, sub, _grad=jet.grad)
    modes_ok = [True] if math.isfinite(p) else [True, False]
    plan = _trial_plan(source.n, trials, seed, lambda t, m: m)
    jobs = [(item, bz) for item in plan for bz in modes_ok]
    small = min(abs(e) for e in eps_grid)

    def run(job):
        item, bz = job
        shape = {"kind": "sine" if bz else "cosine", "modes": item["modes"]}
        fld = make_normal_field(source, sub, shape, policy, boundary_zero=bz,
                                direction=direction, seed=item["seed"], _cache=cache)
        energies = [energy(source, fld, e, p, sub, _grad=jet.grad) for e in eps_grid]
        plus = energy(source, fld, small, p, sub, _grad=jet.grad)
        minus = energy(source, fld, -small, p, sub, _grad=jet.grad)
        record = {"trial": item["trial"], "seed": item["seed"], "boundary_zero": bz,
                  "bump": shape, "direction": fld.direction.tolist(),
                  "normality_defect": fld.normality_defect, "energies": energies,
                  "min_margin": min(e - base for e in energies),
                  "stationarity": (plus - minus) / (2 * small)}
        if p == 2.0:
            dn2 = float(np.sum(sub.weights * np.sum(fld.grads**2, axis=(-2, -1))))
            gaps = [abs((E * E - base * base) - e * e * dn2) / (e * e * dn2)
                    for E, e in zip(energies, eps_grid)] if dn2 > 0 else [0.0]
            record["pythagoras_gap"] = max(gaps)
        return record

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(j) for j in jobs]
    strict = sum(1 for r in records for E in r["energies"]
                 if E < base - STRICT_TOL * (1.0 + base))
    loose = sum(1 for r in records for E in r["energies"] if E < base - slack * (1.0 + base))
    stat = max(abs(r["stationarity"]) for r in records)
    return VariationalReport(p, base, eps_grid, records, stat, strict, slack,
                             "minimal" if loose == 0 else "violated", resid)
