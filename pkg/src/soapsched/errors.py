"""Exception types shared across the package."""


class SoapSchedError(Exception):
    """Base class for all package errors."""


class ParameterError(SoapSchedError, ValueError):
    """A distribution or config parameter is outside its valid range."""


class StabilityError(SoapSchedError, ValueError):
    """The offered load rho = lambda * E[X] is >= 1."""


class DomainError(SoapSchedError, ValueError):
    """A rank function was evaluated outside its domain [0, x_max)."""


class UndefinedRatioError(SoapSchedError, ZeroDivisionError):
    """Efficiency ratio requested over an interval with no completion mass."""


class NoRankFunctionError(SoapSchedError, ValueError):
    """The policy is not a SOAP policy (no rank function over unknown sizes)."""


class UnsupportedPolicyError(SoapSchedError, ValueError):
    """The requested policy is not supported by this backend (sim/analytic)."""
