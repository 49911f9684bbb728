"""Exception hierarchy for every failure mode raised by this package."""


class CesEvdError(Exception):
    """Base class for all cesevd errors."""


class InputError(CesEvdError, ValueError):
    """Invalid argument or violated input invariant."""


class NumericError(CesEvdError):
    """A numeric computation produced unusable output."""


class ConvergenceError(NumericError):
    """Iteration budget exhausted before reaching tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegeneracyError(NumericError):
    """Repeated eigenvalues, vanishing spectral gap, or a singular iterate."""


class DegenerateFilterError(NumericError):
    """Adaptive filter output power too small to normalize."""


class CalibrationError(CesEvdError):
    """Scale-factor calibration could not bracket or reach a root."""


class CoefficientError(CesEvdError):
    """Asymptotic coefficients outside their admissible region."""


class DomainError(CesEvdError, ValueError):
    """Function evaluated outside its domain (e.g. log of a non-PD matrix)."""


class SizeGuardError(InputError):
    """Explicit p^2 x p^2 assembly requested for a dimension above the guard."""


class ConfigError(CesEvdError, ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class CampaignError(CesEvdError):
    """A Monte Carlo campaign could not produce trustworthy results (CLI exit code 3)."""
