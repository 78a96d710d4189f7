"""Exception types shared across the package."""


class DynWardropError(Exception):
    """Base class for all package errors."""


class FifoViolation(DynWardropError):
    """An exit-time map sends a positive-mass entry interval backwards or to a point."""


class ModelParameterError(DynWardropError):
    """An arc model was built with parameters outside its admissible range."""


class NonTermination(DynWardropError):
    """A propagation loop exceeded its time budget; usually a nonconformant model."""


class NoRoute(DynWardropError):
    """Positive demand between an origin-destination pair with no connecting route."""


class DegenerateDemand(DynWardropError):
    """A gap functional was requested for a zero-demand pattern."""


class InstanceTooLarge(DynWardropError):
    """The brute-force reference solver only accepts small instances."""


class ParseError(DynWardropError):
    """A scenario file could not be parsed; carries line context."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DynWardropError):
    """A parsed scenario violates a structural invariant."""
