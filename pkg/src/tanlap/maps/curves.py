"""Parameterized curves R -> R^N with first and second derivatives.

Used as the factors of separated maps u(x, y) = f(x) + g(y).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import GalleryError


class Curve:
    kind = "curve"

    def __call__(self, t):
        raise NotImplementedError

    def d1(self, t):
        raise NotImplementedError

    def d2(self, t):
        raise NotImplementedError

    @property
    def dim(self):
        return len(np.atleast_1d(self(np.zeros(1))[0]))

    def spec(self):
        raise NotImplementedError

    def mapped(self, R):
        return MappedCurve(self, np.asarray(R, dtype=float))


class AffineCurve(Curve):
    kind = "affine"

    def __init__(self, point, direction):
        self.point = np.asarray(point, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        if self.point.shape != self.direction.shape or self.point.ndim != 1:
            raise GalleryError("affine curve needs point and direction of equal length")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.point + t * self.direction

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.direction, t.shape + self.direction.shape).copy()

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + self.direction.shape)

    def spec(self):
        return {"kind": "affine", "point": self.point.tolist(), "direction": self.direction.tolist()}


class ArcCurve(Curve):
    """``sign * (sin(c t), -cos(c t)) / c``: a circle of radius 1/c traversed at unit speed."""

    kind = "arc"

    def __init__(self, c=1.0, sign=1.0):
        self.c = float(c)
        self.sign = float(sign)
        if self.c == 0.0 or not np.isfinite(self.c):
            raise GalleryError("arc curve needs a finite nonzero rate c")

    def __call__(self, t):
        ct = self.c * np.asarray(t, dtype=float)
        return self.sign * np.stack([np.sin(ct), -np.cos(ct)], axis=-1) / self.c

    def d1(self, t):
        ct = self.c * np.asarray(t, dtype=float)
        return self.sign * np.stack([np.cos(ct), np.sin(ct)], axis=-1)

    def d2(self, t):
        ct = self.c * np.asarray(t, dtype=float)
        return self.sign * self.c * np.stack([-np.sin(ct), np.cos(ct)], axis=-1)

    def spec(self):
        return {"kind": "arc", "c": self.c, "sign": self.sign}


class PolyCurve(Curve):
    """Polynomial components; ``coeffs[i][k]`` multiplies ``t**k`` in component i."""

    kind = "poly"

    def __init__(self, coeffs):
        if not coeffs or any(len(c) == 0 for c in coeffs):
            raise GalleryError("poly curve needs a nonempty coefficient list per component")
        self.coeffs = [np.asarray(c, dtype=float) for c in coeffs]
        self._p0 = [np.polynomial.Polynomial(c) for c in self.coeffs]
        self._p1 = [p.deriv(1) for p in self._p0]
        self._p2 = [p.deriv(2) for p in self._p0]

    def _eval(self, polys, t):
        t = np.asarray(t, dtype=float)
        return np.stack([p(t) for p in polys], axis=-1)

    def __call__(self, t):
        return self._eval(self._p0, t)

    def d1(self, t):
        return self._eval(self._p1, t)

    def d2(self, t):
        return self._eval(self._p2, t)

    def spec(self):
        return {"kind": "poly", "coeffs": [c.tolist() for c in self.coeffs]}


class MappedCurve(Curve):
    """Image of a curve under a fixed linear map."""

    kind = "mapped"

    def __init__(self, inner, R):
        self.inner = inner
        self.R = R

    def __call__(self, t):
        return self.inner(t) @ self.R.T

    def d1(self, t):
        return self.inner.d1(t) @ self.R.T

    def d2(self, t):
        return self.inner.d2(t) @ self.R.T

    def spec(self):
        return {"kind": "mapped", "inner": self.inner.spec(), "matrix": self.R.tolist()}


_KINDS = {"affine": AffineCurve, "arc": ArcCurve, "poly": PolyCurve}


def curve_from_spec(spec):
    """Build a curve from ``{"kind": ..., **params}``."""
    if isinstance(spec, Curve):
        return spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise GalleryError(f"curve spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind not in _KINDS:
        raise GalleryError(f"unknown curve kind {kind!r}; choose from {sorted(_KINDS)}")
    params = {k: v for k, v in spec.items() if k != "kind"}
    try:
        return _KINDS[kind](**params)
    except TypeError as exc:
        raise GalleryError(f"bad parameters for {kind} curve: {exc}") from None


@dataclass(frozen=True)
class SeparatedMap:
    """u(x, y) = f(x) + g(y) on the rectangle ``x_interval`` x ``y_interval``."""

    f: Curve
    g: Curve
    x_interval: tuple
    y_interval: tuple

    def __post_init__(self):
        if self.f.dim != self.g.dim:
            raise GalleryError("separated factors must share their target dimension")
        if self.f.dim < 2:
            raise GalleryError("separated maps need N >= 2")
        for a, b in (self.x_interval, self.y_interval):
            if not a < b:
                raise GalleryError("separated map intervals need a < b")

    @property
    def N(self):
        return self.f.dim

    def contains(self, x, y):
        (a, b), (c, d) = self.x_interval, self.y_interval
        return a < x < b and c < y < d

    def __call__(self, x, y):
        return self.f(x) + self.g(y)

    def embedded(self, R):
        return SeparatedMap(self.f.mapped(R), self.g.mapped(R), self.x_interval, self.y_interval)

    def spec(self):
        return {"f": self.f.spec(), "g": self.g.spec(),
                "x_interval": list(self.x_interval), "y_interval": list(self.y_interval)}
