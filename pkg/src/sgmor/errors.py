"""Exception types raised by the numerical routines."""


class NumericalError(RuntimeError):
    """Base class for failures of the matrix-equation and reduction routines."""


class StabilityError(NumericalError):
    """A coefficient matrix is not asymptotically stable where stability is required."""


class ConvergenceError(NumericalError):
    """A computed solution failed its residual verification."""


class SpectralOverlapError(NumericalError):
    """Sylvester operands have (numerically) overlapping mirrored spectra."""


class DefinitenessError(NumericalError):
    """A matrix violates a required definiteness assumption."""


class RankError(ValueError):
    """Requested reduced dimension exceeds the numerical rank available."""
