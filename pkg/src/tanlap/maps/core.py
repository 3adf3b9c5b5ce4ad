"""Box domains, second-order jets and the map-source interface."""

from dataclasses import dataclass
import copy

import numpy as np

from ..errors import DomainError, SingularPointError


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box sampled by an inclusive lattice of ``resolution`` points per axis."""

    lower: tuple
    upper: tuple
    resolution: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        res = self.resolution
        if isinstance(res, (int, np.integer)):
            res = (int(res),) * len(lo)
        res = tuple(int(r) for r in res)
        if not (len(lo) == len(hi) == len(res)) or not lo:
            raise ValueError("lower, upper and resolution must have equal nonzero length")
        if not all(np.isfinite(lo + hi)):
            raise ValueError("box bounds must be finite")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"box needs lower < upper on every axis, got {lo} / {hi}")
        if any(r < 3 for r in res):
            raise ValueError("resolution must be at least 3 per axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "resolution", res)

    @classmethod
    def parse(cls, text, resolution):
        """Parse ``"a,bxc,d"`` (one ``lo,hi`` pair per axis, joined by ``x``)."""
        lo, hi = [], []
        for part in text.split("x"):
            bits = part.split(",")
            if len(bits) != 2:
                raise ValueError(f"malformed box axis {part!r}; expected lo,hi")
            lo.append(float(bits[0]))
            hi.append(float(bits[1]))
        return cls(tuple(lo), tuple(hi), resolution)

    @property
    def ndim(self):
        return len(self.lower)

    @property
    def spacing(self):
        return tuple((b - a) / (r - 1) for a, b, r in zip(self.lower, self.upper, self.resolution))

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in zip(self.lower, self.upper)]))

    def axes(self):
        return [np.linspace(a, b, r) for a, b, r in zip(self.lower, self.upper, self.resolution)]

    def lattice(self):
        """All lattice points, shape ``resolution + (n,)``, index order = axis order."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior(self):
        """Interior lattice points (at least one step from every face)."""
        inner = tuple(slice(1, -1) for _ in self.resolution)
        return self.lattice()[inner]

    def contains(self, pts, rtol=1e-12):
        pts = np.asarray(pts, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        slack = rtol * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
        return np.all((pts >= lo - slack) & (pts <= hi + slack), axis=-1)

    def strictly_inside(self, other):
        """True when this box lies in the open interior of ``other``."""
        return all(a > oa and b < ob for a, b, oa, ob in
                   zip(self.lower, self.upper, other.lower, other.upper))

    def with_resolution(self, resolution):
        return BoxDomain(self.lower, self.upper, resolution)

    def as_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper),
                "resolution": list(self.resolution)}


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of a map at one point or a stack of points.

    Shapes: point (..., n), value (..., N), grad (..., N, n), hess (..., N, n, n).
    """

    point: np.ndarray
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @property
    def n(self):
        return self.grad.shape[-1]

    @property
    def N(self):
        return self.grad.shape[-2]

    @property
    def batch_shape(self):
        return self.grad.shape[:-2]

    def __getitem__(self, idx):
        return Jet2(self.point[idx], self.value[idx], self.grad[idx], self.hess[idx])

    def __len__(self):
        return self.grad.shape[0]

    def flatten(self):
        """Collapse the batch axes into one."""
        n, N = self.n, self.N
        return Jet2(self.point.reshape(-1, n), self.value.reshape(-1, N),
                    self.grad.reshape(-1, N, n), self.hess.reshape(-1, N, n, n))

    def symmetrization_defect(self):
        return float(np.max(np.abs(self.hess - np.swapaxes(self.hess, -1, -2)), initial=0.0))


class MapSource:
    """An evaluatable map R^n -> R^N over a box domain.

    Subclasses implement ``_values`` and ``_jets`` on point stacks of shape
    (M, n). ``domain`` is the default sampling box; analytic maps accept any
    point where ``valid_mask`` holds. ``singular_set`` names points where the closed-form jet does not
    exist; ``degenerate_set`` documents where the gradient rank drops.
    """

    gid = "map"
    singular_set = None
    degenerate_set = None
    analytic = True

    def __init__(self, domain, n, N, params=None):
        self.domain = domain
        self.n = n
        self.N = N
        self.params = dict(params or {})

    def describe(self):
        return {"id": self.gid, "params": self.params, "n": self.n, "N": self.N,
                "domain": self.domain.as_dict(), "singular_set": self.singular_set,
                "degenerate_set": self.degenerate_set}

    # hooks --------------------------------------------------------------
    def _values(self, pts):
        raise NotImplementedError

    def _jets(self, pts):
        raise NotImplementedError

    def singular_mask(self, pts):
        return np.zeros(len(pts), dtype=bool)

    def valid_mask(self, pts):
        """Points where the map itself is defined (beyond the box)."""
        return np.ones(len(pts), dtype=bool)

    def check_domain(self, box):
        """Raise ``DomainError`` if ``box`` leaves the set where the map is defined."""
        corners = np.array(np.meshgrid(*zip(box.lower, box.upper), indexing="ij"))
        corners = corners.reshape(box.ndim, -1).T
        if not self.valid_mask(corners).all():
            raise DomainError(f"box {box.as_dict()} leaves the domain of {self.gid}")

    # public -------------------------------------------------------------
    def with_domain(self, box):
        if box.ndim != self.n:
            raise DomainError(f"{self.gid} is defined on R^{self.n}, box has {box.ndim} axes")
        self.check_domain(box)
        other = copy.copy(self)
        other.domain = box
        return other

    def _points(self, pts):
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.n:
            raise DomainError(f"{self.gid} expects points in R^{self.n}")
        lead = pts.shape[:-1]
        flat = pts.reshape(-1, self.n)
        if not np.isfinite(flat).all():
            raise DomainError("evaluation point is not finite")
        # analytic maps live on their natural domain (plane, strip); the box
        # only sets the default sampling region
        inside = self.valid_mask(flat)
        if not self.analytic:
            inside &= self.domain.contains(flat)
        outside = ~inside
        if outside.any():
            p = flat[np.argmax(outside)]
            raise DomainError(f"point {p.tolist()} lies outside the domain of {self.gid}")
        return flat, lead, single

    def values(self, pts):
        flat, lead, single = self._points(pts)
        v = self._values(flat)
        return v[0] if single else v.reshape(lead + (self.N,))

    def jets(self, pts):
        """Batched jets; raises ``SingularPointError`` if any point is singular."""
        flat, lead, single = self._points(pts)
        sing = self.singular_mask(flat)
        if sing.any():
            p = flat[np.argmax(sing)]
            raise SingularPointError(
                f"point {p.tolist()} lies on the singular set of {self.gid}: {self.singular_set}")
        value, grad, hess = self._jets(flat)
        n, N = self.n, self.N
        jet = Jet2(flat.reshape(lead + (n,)), value.reshape(lead + (N,)),
                   grad.reshape(lead + (N, n)), hess.reshape(lead + (N, n, n)))
        return jet[0] if single else jet

    def interior_jets(self, domain=None):
        """Jets on the interior lattice of ``domain`` (default: own domain).

        Returns ``(jet, singular)``: the jet has batch shape resolution - 2
        per axis and zero entries wherever the boolean mask ``singular`` is set.
        """
        domain = domain or self.domain
        if domain != self.domain:
            self.check_domain(domain)
        pts = domain.interior()
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, self.n)
        sing = self.singular_mask(flat)
        n, N = self.n, self.N
        value = np.zeros((len(flat), N))
        grad = np.zeros((len(flat), N, n))
        hess = np.zeros((len(flat), N, n, n))
        ok = ~sing
        if ok.any():
            jet = self.jets(flat[ok])
            value[ok], grad[ok], hess[ok] = jet.value, jet.grad, jet.hess
        jet = Jet2(pts, value.reshape(shape + (N,)), grad.reshape(shape + (N, n)),
                   hess.reshape(shape + (N, n, n)))
        return jet, sing.reshape(shape)


def eval_jet(source, x):
    """Jet of ``source`` at a single point ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("eval_jet takes a single point; use source.jets for stacks")
    return source.jets(x)
