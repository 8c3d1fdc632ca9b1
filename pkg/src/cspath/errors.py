"""Exception hierarchy shared by all modules."""


class CSPathError(Exception):
    """Base class for library errors."""


class DomainError(CSPathError, ValueError):
    """A time or parameter lies outside its admissible range."""


class ShapeError(CSPathError, ValueError):
    """Array shapes or lengths are inconsistent."""


class ValidationError(CSPathError, ValueError):
    """Input violates a structural invariant (Hermiticity, symmetry, ...)."""

    def __init__(self, message, invariant=None):
        super().__init__(message)
        self.invariant = invariant


class IntegrationError(CSPathError, RuntimeError):
    """Symplectic drift could not be controlled during integration."""


class SingularityError(CSPathError, ArithmeticError):
    """A matrix that must be invertible became numerically singular."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class UnsupportedError(CSPathError, NotImplementedError):
    """Operation is not defined for the given kind of input."""
