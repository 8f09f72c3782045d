"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A model, grid or run configuration is inconsistent or inadmissible."""


class ConfigParseError(ConfigurationError):
    """A configuration file could not be parsed.

    Parameters
    ----------
    message : str
        Description of the problem.
    line : int, optional
        1-based line number of the offending entry, when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SimulationFault(RuntimeError):
    """Raised when the time integration produces non-finite or runaway values."""

    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)
