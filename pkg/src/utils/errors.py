"""Exception hierarchy for the forecasting toolkit."""


class MordredError(Exception):
    """Base class for toolkit errors."""


class ConfigError(MordredError, ValueError):
    """Invalid configuration or command-line usage."""


class ArtifactError(MordredError, ValueError):
    """Malformed, missing or mutually inconsistent files on disk."""


class NumericalError(MordredError, ArithmeticError):
    """Divergence, non-finite values or failed factorisations."""
