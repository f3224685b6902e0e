"""Exception hierarchy shared by the engines and the CLI."""


class CelsimError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(CelsimError, ValueError):
    """An input parameter is outside its admissible range.

    ``field`` names the offending parameter so front ends can point at it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class NumericalError(CelsimError):
    """Base class for failures of a numerical engine."""


class DegenerateSpectrum(NumericalError):
    """The two drift eigenvalues coincide and strict mode was requested."""


class NumericalInstability(NumericalError):
    """Moments grow past the configured horizon above threshold."""


class StepTooLarge(NumericalError):
    """The fixed step violates the stability guard of the integrator."""


class SingularDrift(NumericalError):
    """The moment drift matrix is singular (the system sits at threshold)."""


class CutoffExceeded(NumericalError):
    """Fock-space truncation is too small for the requested evolution."""
