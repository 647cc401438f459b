class SteerkitError(Exception):
    pass


class ValidationError(SteerkitError, ValueError):
    """Input data violates an invariant (Hermiticity, positivity, normalization)."""


class DimensionError(ValidationError):
    pass


class SolverError(SteerkitError, RuntimeError):
    """The conic backend did not return an optimal solution."""

    def __init__(self, message: str, status: str | None = None):
        super().__init__(message)
        self.status = status
