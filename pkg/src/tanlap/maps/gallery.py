"""Analytic gallery: closed-form maps with exact jets.

Entries ``example2``, ``aronsson``, ``k_family``, ``embed3``, ``nu_of_f`` and
``separated_pair`` solve the tangential-Laplacian system (where their jets
exist); ``paraboloid`` is a deliberate non-solution for negative controls.
"""

import math

import numpy as np

from ..errors import GalleryError
from .core import BoxDomain, MapSource
from .curves import AffineCurve, ArcCurve, PolyCurve, SeparatedMap, curve_from_spec

_DEFAULT_RES = 41
_SQ = 1.0 / math.sqrt(2.0)
EMBED3_MATRIX = np.array([[1.0, 0.0], [0.0, _SQ], [0.0, _SQ]])
EMBED3_NORMAL = np.array([0.0, _SQ, -_SQ])
STRIP_HALF_WIDTH = math.pi / 4


def _box(lo, hi, res=_DEFAULT_RES):
    return BoxDomain(lo, hi, res)


def _unit_square():
    return _box((-1.0, -1.0), (1.0, 1.0))


def _zeros_hess(M, N, n):
    return np.zeros((M, N, n, n))


class Example2(MapSource):
    """u(x, y) = (sgn(x) x^4, x^4): rank one, C^2, image a bent line."""

    gid = "example2"
    degenerate_set = "{x = 0}: gradient vanishes (rank 0)"

    def __init__(self):
        super().__init__(_unit_square(), 2, 2)

    def _values(self, pts):
        x = pts[:, 0]
        x4 = x**4
        return np.stack([np.sign(x) * x4, x4], axis=-1)

    def _jets(self, pts):
        x = pts[:, 0]
        M = len(x)
        grad = np.zeros((M, 2, 2))
        grad[:, 0, 0] = 4.0 * np.abs(x) ** 3
        grad[:, 1, 0] = 4.0 * x**3
        hess = _zeros_hess(M, 2, 2)
        hess[:, 0, 0, 0] = 12.0 * np.sign(x) * x**2
        hess[:, 1, 0, 0] = 12.0 * x**2
        return self._values(pts), grad, hess

    def factor_gradient(self, pts):
        """Gradient of the scalar factor f = sgn(x) x^4 in u = nu o f."""
        pts = np.atleast_2d(pts)
        return np.stack([4.0 * np.abs(pts[:, 0]) ** 3, np.zeros(len(pts))], axis=-1)


class Aronsson(MapSource):
    """u(x, y) = |x|^{4/3} - |y|^{4/3}; C^2 only off the coordinate axes."""

    gid = "aronsson"
    singular_set = "coordinate axes {x = 0} U {y = 0} (second derivatives blow up)"

    def __init__(self):
        super().__init__(_unit_square(), 2, 1)

    def _values(self, pts):
        ax = np.abs(pts)
        return (ax[:, 0] ** (4 / 3) - ax[:, 1] ** (4 / 3))[:, None]

    def singular_mask(self, pts):
        return (pts[:, 0] == 0.0) | (pts[:, 1] == 0.0)

    def _jets(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        M = len(x)
        grad = np.empty((M, 1, 2))
        grad[:, 0, 0] = 4 / 3 * np.sign(x) * np.abs(x) ** (1 / 3)
        grad[:, 0, 1] = -4 / 3 * np.sign(y) * np.abs(y) ** (1 / 3)
        hess = _zeros_hess(M, 1, 2)
        hess[:, 0, 0, 0] = 4 / 9 * np.abs(x) ** (-2 / 3)
        hess[:, 0, 1, 1] = -4 / 9 * np.abs(y) ** (-2 / 3)
        return self._values(pts), grad, hess


def adaptive_simpson(fun, a, b, tol=1e-12, max_depth=50):
    """Adaptive Simpson quadrature of a vector-valued ``fun`` on [a, b]."""

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fun(lm), fun(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        err = left + right - whole
        if depth <= 0 or np.max(np.abs(err)) <= 15.0 * tol:
            return left + right + err / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    if a == b:
        return np.zeros_like(np.asarray(fun(a), dtype=float))
    fa, fb = np.asarray(fun(a), float), np.asarray(fun(b), float)
    fm = np.asarray(fun(0.5 * (a + b)), float)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth)


class KFamily(MapSource):
    """u(x, y) = integral from x to y of (cos K(t), sin K(t)) dt on the strip |x - y| < pi/4.

    ``profile="linear"`` takes K(t) = c t (closed form); ``profile="arctan"``
    takes K(t) = 2 arctan(t), whose integral is also elementary. A custom
    C^1 ``K`` with derivative ``dK`` may be passed programmatically; its value
    integral then uses adaptive Simpson at tolerance 1e-12.
    """

    gid = "k_family"
    degenerate_set = "diagonal {x = y}: gradient rank drops to <= 1"

    def __init__(self, c=1.0, profile="linear", K=None, dK=None):
        c = float(c)
        if not np.isfinite(c):
            raise GalleryError("k_family parameter c must be finite")
        if profile not in ("linear", "arctan"):
            raise GalleryError(f"k_family profile must be 'linear' or 'arctan', got {profile!r}")
        if (K is None) != (dK is None):
            raise GalleryError("a custom K needs its derivative dK as well")
        params = {"c": c, "profile": profile} if K is None else {"profile": "custom"}
        super().__init__(_box((-0.3, -0.3), (0.3, 0.3)), 2, 2, params)
        self.c = c
        self.profile = profile
        if K is not None:
            self._K, self._dK = K, dK
            self.profile = "custom"
        elif profile == "linear":
            self._K = lambda t: c * t
            self._dK = lambda t: np.full_like(np.asarray(t, dtype=float), c)
        else:
            self._K = lambda t: 2.0 * np.arctan(t)
            self._dK = lambda t: 2.0 / (1.0 + np.asarray(t, dtype=float) ** 2)

    def valid_mask(self, pts):
        return np.abs(pts[:, 0] - pts[:, 1]) < STRIP_HALF_WIDTH

    def _primitive(self, t):
        if self.profile == "linear":
            if self.c == 0.0:
                return np.stack([t, np.zeros_like(t)], axis=-1)
            return np.stack([np.sin(self.c * t), -np.cos(self.c * t)], axis=-1) / self.c
        return np.stack([2.0 * np.arctan(t) - t, np.log1p(t * t)], axis=-1)

    def _values(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        if self.profile != "custom":
            return self._primitive(y) - self._primitive(x)

        def e(t):
            k = self._K(t)
            return np.array([np.cos(k), np.sin(k)])

        return np.array([adaptive_simpson(e, a, b) for a, b in zip(x, y)])

    def _jets(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        kx, ky = self._K(x), self._K(y)
        dkx, dky = self._dK(x), self._dK(y)
        M = len(x)
        grad = np.empty((M, 2, 2))
        grad[:, 0, 0] = -np.cos(kx)
        grad[:, 1, 0] = -np.sin(kx)
        grad[:, 0, 1] = np.cos(ky)
        grad[:, 1, 1] = np.sin(ky)
        hess = _zeros_hess(M, 2, 2)
        hess[:, 0, 0, 0] = dkx * np.sin(kx)
        hess[:, 1, 0, 0] = -dkx * np.cos(kx)
        hess[:, 0, 1, 1] = -dky * np.sin(ky)
        hess[:, 1, 1, 1] = dky * np.cos(ky)
        return self._values(pts), grad, hess

    def separated(self, x_interval=(-0.15, 0.15), y_interval=(0.25, 0.5)):
        """The split f(x) + g(y) for the linear profile, on a rank-2 rectangle."""
        if self.profile != "linear" or self.c == 0.0:
            raise GalleryError("only the linear k_family profile with c != 0 has an arc split")
        return SeparatedMap(ArcCurve(self.c, -1.0), ArcCurve(self.c, 1.0), x_interval, y_interval)


class ComplexSquare(MapSource):
    """The planar harmonic map (x^2 - y^2, 2xy); only reachable as an ``embed3`` inner map."""

    gid = "harmonic"
    degenerate_set = "origin: gradient vanishes (rank 0)"

    def __init__(self):
        super().__init__(_unit_square(), 2, 2)

    def _values(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([x * x - y * y, 2.0 * x * y], axis=-1)

    def _jets(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        M = len(x)
        grad = np.empty((M, 2, 2))
        grad[:, 0, 0] = 2 * x
        grad[:, 0, 1] = -2 * y
        grad[:, 1, 0] = 2 * y
        grad[:, 1, 1] = 2 * x
        hess = _zeros_hess(M, 2, 2)
        hess[:, 0, 0, 0] = 2.0
        hess[:, 0, 1, 1] = -2.0
        hess[:, 1, 0, 1] = 2.0
        hess[:, 1, 1, 0] = 2.0
        return self._values(pts), grad, hess


class Embed3(MapSource):
    """Post-composition of a planar map with the isometry R^2 -> R^3 of ``EMBED3_MATRIX``."""

    gid = "embed3"

    def __init__(self, inner):
        if inner.N != 2:
            raise GalleryError(f"embed3 needs an N=2 inner map, {inner.gid} has N={inner.N}")
        super().__init__(inner.domain, inner.n, 3, {"inner": inner.gid, **inner.params})
        self.inner = inner
        self.singular_set = inner.singular_set
        self.degenerate_set = inner.degenerate_set
        self.plane_normal = EMBED3_NORMAL.copy()

    def with_domain(self, box):
        other = super().with_domain(box)
        other.inner = self.inner.with_domain(box)
        return other

    def valid_mask(self, pts):
        return self.inner.valid_mask(pts)

    def singular_mask(self, pts):
        return self.inner.singular_mask(pts)

    def _values(self, pts):
        return self.inner._values(pts) @ EMBED3_MATRIX.T

    def _jets(self, pts):
        v, g, h = self.inner._jets(pts)
        return (v @ EMBED3_MATRIX.T,
                np.einsum("ab,mbi->mai", EMBED3_MATRIX, g),
                np.einsum("ab,mbij->maij", EMBED3_MATRIX, h))

    def separated(self, *args, **kwargs):
        return self.inner.separated(*args, **kwargs).embedded(EMBED3_MATRIX)


class NuOfF(MapSource):
    """u = nu o f with nu a unit-speed piecewise-affine curve and f scalar.

    ``f="harmonic"`` is x^2 - y^2, ``f="linear"`` is alpha x + beta y.
    ``directions`` lists the unit directions of the pieces of nu (normalized
    on input) and ``breakpoints`` the strictly increasing parameters where
    consecutive pieces meet; nu(0) = 0.
    """

    gid = "nu_of_f"

    def __init__(self, f="harmonic", alpha=1.0, beta=0.5, directions=None, breakpoints=None):
        if f not in ("harmonic", "linear"):
            raise GalleryError(f"nu_of_f factor must be 'harmonic' or 'linear', got {f!r}")
        if directions is None:
            directions = [[1.0, 2.0, 2.0]]
        breakpoints = [] if breakpoints is None else list(breakpoints)
        D = np.asarray(directions, dtype=float)
        if D.ndim != 2 or D.shape[1] < 1:
            raise GalleryError("nu_of_f directions must be a list of vectors")
        norms = np.linalg.norm(D, axis=1)
        if not np.all(norms > 0) or not np.isfinite(D).all():
            raise GalleryError("nu_of_f directions must be finite and nonzero")
        D = D / norms[:, None]
        bp = np.asarray(breakpoints, dtype=float)
        if len(bp) != len(D) - 1:
            raise GalleryError("nu_of_f needs exactly len(directions) - 1 breakpoints")
        if len(bp) and not np.all(np.diff(bp) > 0):
            raise GalleryError("nu_of_f breakpoints must be strictly increasing")
        params = {"f": f, "directions": D.tolist(), "breakpoints": bp.tolist()}
        if f == "linear":
            params.update(alpha=float(alpha), beta=float(beta))
            if alpha == 0 and beta == 0:
                raise GalleryError("linear factor needs (alpha, beta) != 0")
        super().__init__(_unit_square(), 2, D.shape[1], params)
        self.f_kind = f
        self.alpha, self.beta = float(alpha), float(beta)
        self.directions = D
        self.breakpoints = bp
        self.singular_set = ("f^-1(breakpoints of nu)" if len(bp) else None)
        self.degenerate_set = ("origin: Df = 0 (rank 0)" if f == "harmonic" else None)

    def _f(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        if self.f_kind == "harmonic":
            return x * x - y * y
        return self.alpha * x + self.beta * y

    def factor_gradient(self, pts):
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0], pts[:, 1]
        if self.f_kind == "harmonic":
            return np.stack([2 * x, -2 * y], axis=-1)
        return np.tile([self.alpha, self.beta], (len(pts), 1))

    def _factor_hessian(self, M):
        H = np.zeros((M, 2, 2))
        if self.f_kind == "harmonic":
            H[:, 0, 0] = 2.0
            H[:, 1, 1] = -2.0
        return H

    def nu(self, t):
        t = np.asarray(t, dtype=float)
        edges = np.concatenate([[-np.inf], self.breakpoints, [np.inf]])
        out = np.zeros(t.shape + (self.N,))
        for k, d in enumerate(self.directions):
            lo, hi = edges[k], edges[k + 1]
            out += (np.clip(t, lo, hi) - np.clip(0.0, lo, hi))[..., None] * d
        return out

    def nu_prime(self, t):
        k = np.searchsorted(self.breakpoints, t, side="right")
        return self.directions[k]

    def singular_mask(self, pts):
        if not len(self.breakpoints):
            return np.zeros(len(pts), dtype=bool)
        return np.isin(self._f(pts), self.breakpoints)

    def _values(self, pts):
        return self.nu(self._f(pts))

    def _jets(self, pts):
        t = self._f(pts)
        d = self.nu_prime(t)
        Df = self.factor_gradient(pts)
        grad = d[:, :, None] * Df[:, None, :]
        hess = d[:, :, None, None] * self._factor_hessian(len(pts))[:, None, :, :]
        return self.nu(t), grad, hess


class Paraboloid(MapSource):
    """u(x, y) = (x, y, x^2 + y^2): a graph with curved image, not a solution."""

    gid = "paraboloid"

    def __init__(self):
        super().__init__(_unit_square(), 2, 3)

    def _values(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.stack([x, y, x * x + y * y], axis=-1)

    def _jets(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        M = len(x)
        grad = np.zeros((M, 3, 2))
        grad[:, 0, 0] = 1.0
        grad[:, 1, 1] = 1.0
        grad[:, 2, 0] = 2 * x
        grad[:, 2, 1] = 2 * y
        hess = _zeros_hess(M, 3, 2)
        hess[:, 2, 0, 0] = 2.0
        hess[:, 2, 1, 1] = 2.0
        return self._values(pts), grad, hess


_SEPARATED_PRESETS = {
    # split of k_family(c=1): u = (sin y - sin x, cos x - cos y), on a rank-2 rectangle
    "kfamily": lambda: SeparatedMap(ArcCurve(1.0, -1.0), ArcCurve(1.0, 1.0),
                                    (-0.15, 0.15), (0.25, 0.5)),
    "affine": lambda: SeparatedMap(AffineCurve([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                                   AffineCurve([0.0, 0.0, 1.0], [0.0, 1.0, 1.0]),
                                   (-1.0, 1.0), (-1.0, 1.0)),
    # not a solution: g' = (0, 3y^2, 1) turns out of any fixed plane
    "nonsolution": lambda: SeparatedMap(PolyCurve([[0, 0, 1], [0], [0]]),
                                        PolyCurve([[0], [0, 0, 0, 1], [0, 1]]),
                                        (-1.0, 1.0), (-1.0, 1.0)),
}


class SeparatedPair(MapSource):
    """u(x, y) = f(x) + g(y) from two curve factories.

    Either ``preset`` (``kfamily``, ``affine``, ``nonsolution``) or explicit
    curve specs ``f``/``g`` with ``x_interval``/``y_interval``.
    """

    gid = "separated_pair"

    def __init__(self, preset="kfamily", f=None, g=None, x_interval=None, y_interval=None):
        if f is not None or g is not None:
            if f is None or g is None:
                raise GalleryError("separated_pair needs both f and g curve specs")
            sep = SeparatedMap(curve_from_spec(f), curve_from_spec(g),
                               tuple(x_interval or (-1.0, 1.0)), tuple(y_interval or (-1.0, 1.0)))
            params = {"f": sep.f.spec(), "g": sep.g.spec()}
        else:
            if preset not in _SEPARATED_PRESETS:
                raise GalleryError(f"unknown separated_pair preset {preset!r}; "
                                   f"choose from {sorted(_SEPARATED_PRESETS)}")
            sep = _SEPARATED_PRESETS[preset]()
            if x_interval is not None or y_interval is not None:
                sep = SeparatedMap(sep.f, sep.g, tuple(x_interval or sep.x_interval),
                                   tuple(y_interval or sep.y_interval))
            params = {"preset": preset}
        params.update(x_interval=list(sep.x_interval), y_interval=list(sep.y_interval))
        box = _box((sep.x_interval[0], sep.y_interval[0]), (sep.x_interval[1], sep.y_interval[1]))
        super().__init__(box, 2, sep.N, params)
        self._sep = sep

    def _values(self, pts):
        return self._sep.f(pts[:, 0]) + self._sep.g(pts[:, 1])

    def _jets(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        M = len(x)
        grad = np.stack([self._sep.f.d1(x), self._sep.g.d1(y)], axis=-1)
        hess = _zeros_hess(M, self.N, 2)
        hess[:, :, 0, 0] = self._sep.f.d2(x)
        hess[:, :, 1, 1] = self._sep.g.d2(y)
        return self._values(pts), grad, hess

    def separated(self):
        return self._sep


def _embed3(inner="k_family", **inner_params):
    if inner == "embed3":
        raise GalleryError("embed3 cannot wrap itself")
    if inner == "harmonic":
        if inner_params:
            raise GalleryError("the harmonic inner map takes no parameters")
        return Embed3(ComplexSquare())
    return Embed3(gallery(inner, inner_params))


GALLERY = {
    "example2": (Example2, "u = (sgn(x) x^4, x^4) on [-1,1]^2; rank one, C^2, bent-line image.", {}),
    "aronsson": (Aronsson, "u = |x|^(4/3) - |y|^(4/3) (N=1) on [-1,1]^2; singular on the axes.", {}),
    "k_family": (KFamily, "u = int_x^y (cos K, sin K) dt on the strip |x-y| < pi/4; box [-0.3,0.3]^2.",
                 {"c": "rate in K(t) = c t (default 1)",
                  "profile": "'linear' (K = c t, default) or 'arctan' (K = 2 arctan t)"}),
    "embed3": (_embed3, "inner planar map composed with the isometry R^2 -> R^3 "
                        "rows (1,0),(0,1/sqrt2),(0,1/sqrt2).",
               {"inner": "any N=2 gallery id, or 'harmonic' for (x^2-y^2, 2xy); default k_family",
                "...": "remaining parameters go to the inner map"}),
    "nu_of_f": (NuOfF, "u = nu(f(x,y)), nu unit-speed piecewise affine, f scalar; on [-1,1]^2.",
                {"f": "'harmonic' (x^2-y^2, default) or 'linear' (alpha x + beta y)",
                 "alpha": "linear factor x-coefficient (default 1)",
                 "beta": "linear factor y-coefficient (default 0.5)",
                 "directions": "list of piece directions in R^N (default [[1,2,2]]/3)",
                 "breakpoints": "increasing parameters joining the pieces (len = pieces - 1)"}),
    "paraboloid": (Paraboloid, "u = (x, y, x^2+y^2) on [-1,1]^2; NOT a solution (negative control).", {}),
    "separated_pair": (SeparatedPair, "u = f(x) + g(y) from two curve factories.",
                       {"preset": "'kfamily' (default), 'affine' or 'nonsolution'",
                        "f, g": "curve specs {kind: affine|arc|poly, ...} overriding the preset",
                        "x_interval, y_interval": "factor intervals (box of the map)"}),
}


def gallery(gid, params=None, **kwargs):
    """Build gallery entry ``gid`` with parameters from ``params`` and/or keywords."""
    if gid not in GALLERY:
        raise GalleryError(f"unknown gallery id {gid!r}; choose from {sorted(GALLERY)}")
    merged = dict(params or {})
    merged.update(kwargs)
    factory = GALLERY[gid][0]
    try:
        return factory(**merged)
    except TypeError as exc:
        raise GalleryError(f"bad parameters for {gid}: {exc}") from None


def catalogue():
    """Static listing of the gallery: id, summary and parameter docs."""
    return [{"id": gid, "summary": summary, "params": dict(pdoc)}
            for gid, (_, summary, pdoc) in GALLERY.items()]
