"""Exception hierarchy. Every error raised on bad input derives from ``TanlapError``."""


class TanlapError(ValueError):
    """Base class for input and precondition errors."""


class NonFiniteError(TanlapError):
    pass


class SingularGramError(TanlapError):
    pass


class RankMismatchError(TanlapError):
    pass


class GalleryError(TanlapError):
    """Unknown gallery id or parameters outside their documented ranges."""


class DomainError(TanlapError):
    pass


class SingularPointError(DomainError):
    pass


class StencilError(TanlapError):
    """Finite-difference stencil would leave the lattice."""


class GridFormatError(TanlapError):
    pass


class ConstantRankError(TanlapError):
    pass


class DegenerateDirectionError(TanlapError):
    pass


class DegenerateCoefficientsError(TanlapError):
    pass


class PathDegeneracyError(DegenerateCoefficientsError):
    pass


class PreconditionError(TanlapError):
    pass
