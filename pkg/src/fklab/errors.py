"""Exception hierarchy shared by all modules."""


class FKLabError(Exception):
    """Base class for all errors raised by fklab."""


class ConfigurationError(FKLabError, ValueError):
    """Invalid parameters, unknown names or malformed configuration files."""

    def __init__(self, message, key=None, path=None):
        self.key = key
        self.path = path
        self.message = message
        prefix = []
        if path is not None:
            prefix.append(str(path))
        if key is not None:
            prefix.append(repr(key))
        if prefix:
            message = f"{': '.join(prefix)}: {message}"
        super().__init__(message)


class InvalidInputError(FKLabError, ValueError):
    """Non-finite or otherwise unusable numerical input."""


class NumericalError(FKLabError, ArithmeticError):
    """A numerical procedure failed (overflow, non-convergence, singularity)."""

    def __init__(self, message, step=None, residual=None):
        self.step = step
        self.residual = residual
        if step is not None:
            message = f"{message} (step {step})"
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class SingularMatrixError(NumericalError):
    pass


class InsufficientDataError(FKLabError, ValueError):
    """Too few usable rows to fit a convergence order."""
