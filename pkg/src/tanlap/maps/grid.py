"""Grid-sampled maps: CSV ingestion and central-difference jets."""

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, GridFormatError, StencilError
from .core import BoxDomain, Jet2, MapSource


@dataclass(frozen=True)
class GridMap:
    """Samples of a map on the full lattice of ``domain``; ``samples`` has shape resolution + (N,)."""

    domain: BoxDomain
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape[:-1] != self.domain.resolution:
            raise GridFormatError(
                f"samples shape {s.shape[:-1]} does not match resolution {self.domain.resolution}")
        if not np.isfinite(s).all():
            raise GridFormatError("grid samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def spacing(self):
        return self.domain.spacing

    @property
    def n(self):
        return self.domain.ndim

    @property
    def N(self):
        return self.samples.shape[-1]


def sample_grid(source, domain=None):
    """Sample ``source`` values on the lattice of ``domain`` (default: its own domain)."""
    domain = domain or source.domain
    return GridMap(domain, source.values(domain.lattice()))


def _shift(samples, offsets, inner):
    """View of ``samples`` restricted to ``inner`` index ranges, shifted by ``offsets``."""
    idx = tuple(slice(lo + o, hi + o) for (lo, hi), o in zip(inner, offsets))
    return samples[idx]


def _fd(grid, inner):
    """Central-difference jets on the index box ``inner`` (list of (lo, hi) per axis)."""
    s = grid.samples
    n = grid.n
    h = grid.spacing
    zero = (0,) * n

    def e(*pairs):
        off = [0] * n
        for axis, step in pairs:
            off[axis] += step
        return tuple(off)

    centre = _shift(s, zero, inner)
    lead = centre.shape[:-1]
    N = centre.shape[-1]
    grad = np.empty(lead + (N, n))
    hess = np.empty(lead + (N, n, n))
    defect = 0.0
    for i in range(n):
        up = _shift(s, e((i, 1)), inner)
        dn = _shift(s, e((i, -1)), inner)
        grad[..., i] = (up - dn) / (2 * h[i])
        hess[..., i, i] = (up - 2 * centre + dn) / h[i] ** 2
    for i, j in itertools.combinations(range(n), 2):
        pp = _shift(s, e((i, 1), (j, 1)), inner)
        pm = _shift(s, e((i, 1), (j, -1)), inner)
        mp = _shift(s, e((i, -1), (j, 1)), inner)
        mm = _shift(s, e((i, -1), (j, -1)), inner)
        # d_i(d_j u) and d_j(d_i u): same nodes, different association order
        est_ij = ((pp - pm) - (mp - mm)) / (4 * h[i] * h[j])
        est_ji = ((pp - mp) - (pm - mm)) / (4 * h[j] * h[i])
        defect = max(defect, float(np.max(np.abs(est_ij - est_ji), initial=0.0)))
        avg = 0.5 * (est_ij + est_ji)
        hess[..., i, j] = avg
        hess[..., j, i] = avg
    pts = grid.domain.lattice()[tuple(slice(lo, hi) for lo, hi in inner)]
    return Jet2(pts, centre.copy(), grad, hess), defect


def fd_jet(grid, index):
    """Jet at one strictly interior lattice index."""
    index = tuple(int(i) for i in index)
    res = grid.domain.resolution
    if len(index) != len(res):
        raise StencilError(f"index {index} has wrong length for a {len(res)}-D grid")
    if any(i < 1 or i > r - 2 for i, r in zip(index, res)):
        raise StencilError(f"index {index} is not strictly interior for resolution {res}")
    jet, _ = _fd(grid, [(i, i + 1) for i in index])
    return jet[(0,) * len(index)]


def fd_jets(grid):
    """Jets at every interior lattice point, batch shape = resolution - 2 per axis.

    Also returns the largest gap between the two cross-derivative estimates.
    """
    return _fd(grid, [(1, r - 1) for r in grid.domain.resolution])


class GridSource(MapSource):
    """A ``GridMap`` exposed as a map source; jets exist at interior lattice points only."""

    gid = "grid"
    analytic = False

    def __init__(self, grid, label="grid"):
        super().__init__(grid.domain, grid.n, grid.N, {"source": label})
        self.grid = grid

    def with_domain(self, box):
        if box != self.domain:
            raise DomainError("a grid source cannot be re-boxed; its lattice is fixed")
        return self

    def interior_jets(self, domain=None):
        if domain is not None and domain != self.domain:
            raise DomainError("a grid source cannot be re-boxed; its lattice is fixed")
        jet, _ = fd_jets(self.grid)
        return jet, np.zeros(jet.batch_shape, dtype=bool)

    def _indices(self, pts):
        lo = np.asarray(self.domain.lower)
        h = np.asarray(self.domain.spacing)
        fidx = (pts - lo) / h
        idx = np.rint(fidx).astype(int)
        if not np.allclose(fidx, idx, atol=1e-6):
            raise DomainError("grid sources are evaluated only at lattice points")
        return idx

    def _values(self, pts):
        idx = self._indices(pts)
        return self.grid.samples[tuple(idx.T)]

    def _jets(self, pts):
        jets = [fd_jet(self.grid, i) for i in self._indices(pts)]
        return (np.stack([j.value for j in jets]), np.stack([j.grad for j in jets]),
                np.stack([j.hess for j in jets]))


def load_grid(path):
    """Read a lattice CSV with header ``x1..xn,u1..uN`` into a ``GridMap``.

    Rows may come in any order; the lattice must be complete and regular.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise GridFormatError(f"{path}: empty file") from None
        xs = [h for h in header if h.startswith("x")]
        us = [h for h in header if h.startswith("u")]
        n, N = len(xs), len(us)
        if n == 0 or N == 0 or header != xs + us:
            raise GridFormatError(f"{path}: header must be x1..xn,u1..uN, got {header}")
        if xs != [f"x{i + 1}" for i in range(n)] or us != [f"u{i + 1}" for i in range(N)]:
            raise GridFormatError(f"{path}: header columns must be numbered from 1 in order")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != n + N:
                raise GridFormatError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {n + N}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise GridFormatError(f"{path}: row {lineno} has a non-numeric cell") from None
            if not np.isfinite(vals).all():
                raise GridFormatError(f"{path}: row {lineno} has a non-finite cell")
            rows.append((lineno, vals))
    if not rows:
        raise GridFormatError(f"{path}: no data rows")
    data = np.array([v for _, v in rows])
    linenos = np.array([ln for ln, _ in rows])
    coords = data[:, :n]
    axes = []
    for k in range(n):
        ax = np.unique(coords[:, k])
        if len(ax) < 3:
            raise GridFormatError(f"{path}: axis x{k + 1} has {len(ax)} distinct values, need >= 3")
        steps = np.diff(ax)
        if not np.allclose(steps, steps.mean(), rtol=1e-6, atol=0):
            raise GridFormatError(f"{path}: axis x{k + 1} is not regularly spaced")
        axes.append(ax)
    res = tuple(len(a) for a in axes)
    expected = int(np.prod(res))
    idx = np.stack([np.searchsorted(axes[k], coords[:, k]) for k in range(n)], axis=1)
    flat = np.ravel_multi_index(tuple(idx.T), res)
    order = np.argsort(flat, kind="stable")
    dup = np.flatnonzero(np.diff(flat[order]) == 0)
    if len(dup):
        raise GridFormatError(f"{path}: row {linenos[order[dup[0] + 1]]} repeats a lattice point")
    if len(flat) != expected:
        missing = np.setdiff1d(np.arange(expected), flat)
        where = np.unravel_index(missing[0], res)
        point = [float(axes[k][where[k]]) for k in range(n)]
        raise GridFormatError(
            f"{path}: incomplete lattice, {expected - len(flat)} point(s) missing, first at {point}")
    samples = np.empty(res + (N,))
    samples.reshape(-1, N)[flat] = data[:, n:]
    domain = BoxDomain(tuple(a[0] for a in axes), tuple(a[-1] for a in axes), res)
    return GridMap(domain, samples)


def write_grid(path, grid):
    """Write a ``GridMap`` in the lattice CSV format (lexicographic row order)."""
    n, N = grid.n, grid.N
    pts = grid.domain.lattice().reshape(-1, n)
    vals = grid.samples.reshape(-1, N)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(N)])
        for p, v in zip(pts, vals):
            w.writerow([repr(float(x)) for x in p] + [repr(float(x)) for x in v])
