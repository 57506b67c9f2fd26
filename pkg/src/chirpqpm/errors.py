"""Exception hierarchy.

Every error raised by the package derives from :class:`ChirpQPMError`.  The
``category`` attribute is what the command line maps to an exit code.
"""


class ChirpQPMError(Exception):
    category = "numeric"


class DispersionRangeError(ChirpQPMError, ValueError):
    """Wavelength outside the validity range of a Sellmeier model."""

    def __init__(self, wavelength, bound, which, context=None):
        self.wavelength = wavelength
        self.bound = bound
        self.which = which
        self.context = context
        op = "<" if which == "lower" else ">"
        msg = f"wavelength {wavelength!r} um {op} {which} validity bound {bound} um"
        super().__init__(f"{context}: {msg}" if context else msg)


class GratingError(ChirpQPMError, ValueError):
    """Invalid grating geometry or a coordinate outside the crystal."""


class SmallChirpError(ChirpQPMError, ValueError):
    """Chirp below the closed-form crossover; use the unchirped limit."""


class NumericalDomainError(ChirpQPMError, ArithmeticError):
    """Argument outside the domain where a special function is reliable."""


class QuadratureError(ChirpQPMError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")


class DegenerateSpectrumError(ChirpQPMError, ValueError):
    """Spectrum has no positive maximum, so a width is undefined."""


class AliasingError(ChirpQPMError, ValueError):
    """Requested time window exceeds what the frequency grid resolves."""

    def __init__(self, requested, nyquist):
        self.requested = requested
        self.nyquist = nyquist
        super().__init__(
            f"time window {requested:.4e} s exceeds the unaliased window "
            f"{nyquist:.4e} s of the frequency grid; refine the grid"
        )


class SchmidtError(ChirpQPMError, ArithmeticError):
    """SVD of the joint amplitude failed."""


class ConfigParseError(ChirpQPMError):
    category = "parse"


class ConfigValidationError(ChirpQPMError, ValueError):
    category = "validation"


class ProductIntegrityError(ChirpQPMError, IOError):
    category = "io"
