"""Exception hierarchy shared by all modules."""


class ShellVQEError(Exception):
    """Base class for package errors."""


class ConfigurationError(ShellVQEError, ValueError):
    """Invalid shell name, nucleus, or run configuration."""


class InteractionParseError(ShellVQEError, ValueError):
    """Malformed interaction file line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InteractionValidationError(ShellVQEError, ValueError):
    """Interaction refers to orbitals that are not part of the valence space."""


class SolverError(ShellVQEError, RuntimeError):
    """Eigensolver failed to converge."""


class ResourceError(ShellVQEError, MemoryError):
    """Requested simulation exceeds the supported statevector size."""


class OptimizerError(ShellVQEError, RuntimeError):
    """Parameter optimization diverged."""


class EstimatorError(ShellVQEError, RuntimeError):
    """A measurement circuit kept no shots after post-selection."""

    def __init__(self, message: str, circuit_id: int | None = None):
        self.circuit_id = circuit_id
        super().__init__(message)
