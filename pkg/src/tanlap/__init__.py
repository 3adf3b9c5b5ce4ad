"""Tangential-Laplacian residuals, rigidity checks and variational tests for vector maps."""

__version__ = "0.1.0"

from . import linalg, maps, operators, rigidity, separated, variational  # noqa: E402
from ._backend import available as available_backends, current as current_backend  # noqa: E402
from ._backend import use as use_backend  # noqa: E402
from .errors import TanlapError  # noqa: E402
from .linalg import DEFAULT_POLICY, ProjectionPair, RankPolicy  # noqa: E402
from .maps import BoxDomain, Jet2, eval_jet, gallery  # noqa: E402

__all__ = [
    "__version__", "linalg", "maps", "operators", "rigidity", "separated", "variational",
    "available_backends", "current_backend", "use_backend", "TanlapError",
    "DEFAULT_POLICY", "ProjectionPair", "RankPolicy", "BoxDomain", "Jet2", "eval_jet", "gallery",
]
