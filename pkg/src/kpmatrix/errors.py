"""Exception hierarchy shared by all modules."""


class KPError(Exception):
    """Base class for errors raised by kpmatrix."""


class PotentialError(KPError, ValueError):
    """Invalid barrier geometry or out-of-box evaluation."""


class NumericalError(KPError, RuntimeError):
    """An iterative or root-finding step failed to converge."""


class TruncationError(NumericalError):
    """The sine basis is too small to represent a requested state."""


class ConfigError(KPError, ValueError):
    """A scenario configuration could not be parsed or validated."""
