"""Exception types shared across the toolkit."""


class SolitonForgeError(Exception):
    """Base class for all toolkit errors."""


class DomainError(SolitonForgeError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericsError(SolitonForgeError):
    """Overflow, non-finite values, or a numerical scheme breaking down."""


class SpectralError(SolitonForgeError):
    """Spectral-parameter trouble: eigenvalue hit, pole on a path, etc."""


class ZeroOnContourError(SpectralError):
    """A zero of the transmission coefficient lies (numerically) on the contour."""


class PoleOnRayError(SpectralError):
    """An eigenvalue sits on the imaginary ray used by the energy integral."""


class EmptySpectrumError(SpectralError):
    """Soliton removal requested on a region containing no spectrum."""


class BackgroundSpectrumError(SpectralError):
    """The background state already has spectrum where solitons are being added."""


class ResolutionError(SolitonForgeError):
    """Contour winding did not settle to an integer; more samples needed."""


class ConditioningError(SolitonForgeError):
    """A linear system is too ill-conditioned to trust."""


class ConfluenceError(ConditioningError):
    """Gram system degenerate because spectral parameters (nearly) collide."""


class InstabilityError(NumericsError):
    """Time stepper detected blow-up."""
