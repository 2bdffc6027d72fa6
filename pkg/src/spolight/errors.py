"""Exception hierarchy shared by all spolight modules."""


class SpolightError(Exception):
    """Base class for every error raised by the library."""


class DomainError(SpolightError, ValueError):
    """An argument lies outside the domain of the function."""


class TruncationError(SpolightError, ArithmeticError):
    """A series did not reach its tolerance within ``max_terms`` terms."""


class QuadratureError(SpolightError, ArithmeticError):
    """Adaptive quadrature did not converge."""


class ConsistencyError(SpolightError, ArithmeticError):
    """Two independent evaluation routes disagree beyond tolerance."""


class UndefinedMomentError(SpolightError, ArithmeticError):
    """A ratio statistic was requested for a distribution with zero mean."""


class ConfigError(SpolightError, ValueError):
    """Invalid simulation or analysis configuration."""


class MalformedStreamError(SpolightError, ValueError):
    """A binned-count CSV file violates the stream grammar."""


class ZeroMeanChannelError(SpolightError, ArithmeticError):
    """A channel has no counts, so a normalized correlation is undefined."""


class EmptySelectionError(SpolightError, ValueError):
    """A plot request selected no usable numeric data."""
