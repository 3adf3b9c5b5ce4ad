"""Map sources: the analytic gallery and grid-sampled maps."""

from .core import BoxDomain, Jet2, MapSource, eval_jet
from .curves import AffineCurve, ArcCurve, Curve, PolyCurve, SeparatedMap, curve_from_spec
from .gallery import EMBED3_MATRIX, EMBED3_NORMAL, GALLERY, catalogue, gallery
from .grid import GridMap, GridSource, fd_jet, fd_jets, load_grid, sample_grid, write_grid

__all__ = [
    "BoxDomain", "Jet2", "MapSource", "eval_jet",
    "AffineCurve", "ArcCurve", "Curve", "PolyCurve", "SeparatedMap", "curve_from_spec",
    "EMBED3_MATRIX", "EMBED3_NORMAL", "GALLERY", "catalogue", "gallery",
    "GridMap", "GridSource", "fd_jet", "fd_jets", "load_grid", "sample_grid", "write_grid",
]
