"""Exception types shared across the package."""


class OxireadError(Exception):
    """Base class for all package errors."""


class ValidationError(OxireadError, ValueError):
    """An input violated a documented invariant (bad box, out-of-range vital, ...)."""


class ParseError(OxireadError, ValueError):
    """A file record could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class BackendError(OxireadError, RuntimeError):
    """A detector backend failed (missing model, malformed input, ...).

    Distinct from an empty detection result, which is a valid outcome.
    """


class UndefinedMetricError(OxireadError, ValueError):
    """A metric has no defined value for the given inputs (e.g. AP with zero
    ground-truth instances, standard deviation of a single fold)."""
