"""Exception taxonomy shared by all modules."""


class TurntakeError(Exception):
    """Base class for all errors raised by this package."""


class InputValidationError(TurntakeError, ValueError):
    """User-supplied data violates an input contract (bad file, bad grid, ...)."""


class ConfigurationError(TurntakeError, ValueError):
    """Configuration values are inconsistent or infeasible."""
