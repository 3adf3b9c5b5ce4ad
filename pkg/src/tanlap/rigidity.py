"""Rank segmentation of the domain and flatness of the image on each piece.

The interior lattice is split into 4-connected components of equal
numerical rank; the image of each component is fitted by an affine subspace
whose dimension follows the rank, and the orthogonal misfit decides whether
that piece of the image is flat.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import pdist

from .errors import PreconditionError
from .linalg import DEFAULT_POLICY, principal_angle, projections_batch

MIN_CELLS = 4
_EXACT_DIAMETER_LIMIT = 4096


@dataclass(frozen=True)
class RankComponent:
    """A 4-connected set of interior lattice cells sharing one numerical rank."""

    label: int
    rank: int
    cells: np.ndarray
    points: np.ndarray
    images: np.ndarray

    @property
    def size(self):
        return len(self.cells)


@dataclass(frozen=True)
class AffineFit:
    base: np.ndarray
    basis: np.ndarray
    dim: int
    rms: float
    max_dev: float

    def as_dict(self):
        return {"dim": self.dim, "base": self.base.tolist(), "basis": self.basis.T.tolist(),
                "rms": self.rms, "max_dev": self.max_dev}


def rank_segmentation(source, domain=None, policy=DEFAULT_POLICY):
    """Label interior lattice cells by numerical rank and split into 4-connected pieces.

    Returns ``(components, singular_cells)``. Cells on the source's singular set
    carry no jet and are left out of every component.
    """
    domain = domain or source.domain
    if any(r < 3 for r in domain.resolution):
        raise PreconditionError("the domain lattice has no interior cells")
    jet, singular = source.interior_jets(domain)
    _, _, rank, _ = projections_batch(jet.grad, policy)
    rank = np.where(singular, -1, rank)
    # face neighbours only (4-connectivity in the plane)
    structure = ndimage.generate_binary_structure(rank.ndim, 1)

    found = []
    for r in np.unique(rank[rank >= 0]):
        labels, count = ndimage.label(rank == r, structure=structure)
        for k in range(1, count + 1):
            cells = np.argwhere(labels == k)
            found.append((tuple(cells[0]), int(r), cells))
    # raster order of each component's first cell gives a stable numbering
    found.sort(key=lambda item: item[0])
    components = []
    for label, (_, r, cells) in enumerate(found):
        idx = tuple(cells.T)
        components.append(RankComponent(label=label, rank=r, cells=cells,
                                        points=jet.point[idx], images=jet.value[idx]))
    return components, np.argwhere(singular)


def fit_affine(points, dim):
    """Best affine subspace of dimension ``dim`` through ``points`` (rows) by PCA."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise PreconditionError("fit_affine takes a 2-D array of points")
    M, N = X.shape
    if not 0 <= dim < N:
        raise PreconditionError(f"fit dimension must satisfy 0 <= dim < N = {N}, got {dim}")
    if M < dim + 1:
        raise PreconditionError(f"a {dim}-dimensional fit needs at least {dim + 1} points, got {M}")
    base = X.mean(axis=0)
    C = X - base
    _, _, Vt = np.linalg.svd(C, full_matrices=False)
    basis = Vt[:dim].T
    resid = C - (C @ basis) @ basis.T
    dist = np.linalg.norm(resid, axis=1)
    return AffineFit(base=base, basis=basis, dim=dim, rms=float(np.sqrt(np.mean(dist**2))),
                     max_dev=float(dist.max()))


def image_diameter(images):
    """Largest pairwise distance; the bounding-box diagonal beyond 4096 points."""
    if len(images) < 2:
        return 0.0
    if len(images) <= _EXACT_DIAMETER_LIMIT:
        return float(pdist(images).max())
    return float(np.linalg.norm(images.max(axis=0) - images.min(axis=0)))


@dataclass(frozen=True)
class ComponentVerdict:
    component: RankComponent
    fit: AffineFit
    diameter: float
    flat: bool
    eligible: bool
    trivial: bool

    def as_dict(self):
        c = self.component
        return {"label": c.label, "rank": c.rank, "cells": c.size,
                "first_cell": c.cells[0].tolist(), "first_point": c.points[0].tolist(),
                "diameter": self.diameter, "fit": self.fit.as_dict(),
                "verdict": "flat" if self.flat else "not-flat",
                "eligible": self.eligible, "full_dimensional": self.trivial}


@dataclass(frozen=True)
class FlatnessReport:
    components: list
    tol: float
    singular_cells: np.ndarray
    policy: object

    @property
    def flat(self):
        return all(v.flat for v in self.components if v.eligible)

    def of_rank(self, rank, eligible_only=True):
        return [v for v in self.components if v.component.rank == rank
                and (v.eligible or not eligible_only)]

    def as_dict(self):
        return {"tol": self.tol, "policy": self.policy.as_dict(),
                "components": [v.as_dict() for v in self.components],
                "singular_cells": len(self.singular_cells),
                "verdict": "flat" if self.flat else "not-flat"}


def _fit_dim(rank, images):
    if rank == 0:
        return 0
    distinct = len(np.unique(images, axis=0)) >= 2
    return max(rank, 1 if distinct else 0)


def flatness_report(source, domain=None, policy=DEFAULT_POLICY, tol=1e-8):
    """Fit each rank component's image and judge it flat against ``tol``.

    Rank-0 pieces are flat iff their image diameter is at most ``tol``; other
    pieces iff the fit's max deviation is at most ``tol * (1 + diameter)``.
    Pieces whose rank equals N fill an open set of R^N and are flat trivially.
    Pieces with fewer than ``MIN_CELLS`` cells are reported but not judged.
    """
    components, singular = rank_segmentation(source, domain, policy)
    N = source.N
    verdicts = []
    for comp in components:
        diam = image_diameter(comp.images)
        dim = min(_fit_dim(comp.rank, comp.images), len(comp.images) - 1)
        trivial = dim >= N
        if trivial:
            fit = AffineFit(base=comp.images.mean(axis=0), basis=np.eye(N), dim=N,
                            rms=0.0, max_dev=0.0)
        else:
            fit = fit_affine(comp.images, dim)
        if comp.rank == 0:
            flat = diam <= tol
        else:
            flat = fit.max_dev <= tol * (1.0 + diam)
        verdicts.append(ComponentVerdict(comp, fit, diam, bool(flat),
                                         comp.size >= MIN_CELLS, trivial))
    return FlatnessReport(components=verdicts, tol=tol, singular_cells=singular, policy=policy)


def subspace_angle(fit_a, fit_b):
    """Largest principal angle between the directions of two equal-dimension fits."""
    if fit_a.dim != fit_b.dim:
        raise PreconditionError("only fits of equal dimension can be compared")
    if fit_a.dim == 0:
        return 0.0
    return principal_angle(fit_a.basis, fit_b.basis)


def common_subspace(fits):
    """Pairwise comparison of fitted planes or lines.

    Returns the largest direction angle and the largest offset of one fit's
    base point from another fit's affine span.
    """
    angle, offset = 0.0, 0.0
    for i, a in enumerate(fits):
        for b in fits[i + 1:]:
            angle = max(angle, subspace_angle(a, b))
            d = b.base - a.base
            offset = max(offset, float(np.linalg.norm(d - a.basis @ (a.basis.T @ d))))
    return angle, offset
