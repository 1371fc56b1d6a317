"""Exception hierarchy shared across the solver pipeline."""


class CylDriftError(Exception):
    """Base class for all package errors."""


class GridError(CylDriftError, ValueError):
    pass


class NonElliptic(CylDriftError, ValueError):
    pass


class SchemeError(CylDriftError, ValueError):
    """Requested scheme is incompatible with another requested property."""


class AdjointOfDirichlet(CylDriftError):
    pass


class SolverError(CylDriftError):
    """Any failure inside the linear-algebra layer."""


class SingularWithoutAnchor(SolverError):
    pass


class IterationLimitExceeded(SolverError):
    pass


class ResidualTooLarge(SolverError):
    pass


class NonPositiveGroundState(SolverError):
    pass


class InsufficientWindows(CylDriftError, ValueError):
    pass


class IncompatibleData(CylDriftError):
    """Data violate the solvability condition; ``report`` holds the numbers."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SchemaError(CylDriftError, ValueError):
    """Config validation failure. ``path`` names the offending key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
