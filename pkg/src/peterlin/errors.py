"""Exception hierarchy shared by the solvers and the driver."""


class PeterlinError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(PeterlinError, ValueError):
    pass


class DomainError(PeterlinError, ValueError):
    pass


class ShapeError(PeterlinError, ValueError):
    pass


class RepresentabilityError(PeterlinError, ValueError):
    """Initial Gaussian is too wide to be square integrable against M."""


class PositivityError(PeterlinError):
    """A conformation tensor lost positivity of its trace."""


class StepRejectedError(PeterlinError):
    """Raised when the CFL number of a step exceeds the admissible bound."""

    def __init__(self, cfl, limit=0.5, step=None):
        self.cfl = cfl
        self.limit = limit
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"CFL number {cfl:.4g} exceeds {limit}{where}")


class BlowupError(PeterlinError):
    """Non-finite values appeared in a solver state."""

    def __init__(self, what, cell=None, step=None):
        self.cell = cell
        self.step = step
        msg = f"non-finite values in {what}"
        if cell is not None:
            msg += f" at cell {cell}"
        if step is not None:
            msg += f" (step {step})"
        super().__init__(msg)


class ConfigError(PeterlinError):
    """Malformed or inconsistent run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
