"""Exception types raised across the package."""


class MatchVGError(Exception):
    """Base class for all package errors."""


class DomainError(MatchVGError, ValueError):
    """An argument lies outside the domain of the function."""


class CapacityError(MatchVGError, ValueError):
    """A request exceeds a documented size guard."""


class IngestionError(MatchVGError, ValueError):
    """Tabular input failed validation.

    ``problems`` holds ``(line_number, message)`` pairs for every offending
    line so callers can report all of them at once.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "; ".join(f"line {ln}: {msg}" for ln, msg in self.problems)
        super().__init__(f"invalid match data ({len(self.problems)} problem(s)): {lines}")


class SingularFitError(MatchVGError, ArithmeticError):
    """The design matrix is rank deficient."""

    def __init__(self, columns, message=None):
        self.columns = list(columns)
        if message is None:
            message = "rank-deficient design; linearly dependent columns: " + ", ".join(self.columns)
        super().__init__(message)


class ConvergenceError(MatchVGError, ArithmeticError):
    """An iterative fit failed to converge."""
