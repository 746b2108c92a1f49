"""Exception hierarchy shared by all modules."""


class RotatorError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RotatorError, ValueError):
    """An input lies outside the region where a formula is defined."""


class DegenerateError(DomainError):
    """A denominator or Gram quantity vanishes (e.g. pk = 0, zero spin)."""


class InversionError(RotatorError):
    """The mass-spin relation cannot be inverted on the requested range."""


class ClassificationError(RotatorError):
    """An operation was asked of the wrong kind of rotator."""


class FeasibilityError(RotatorError):
    """The centre-of-momentum gauge multipliers are not finite."""


class SuperluminalGaugeError(DomainError):
    """A fundamental gauge profile asks for |tanh psi| >= 1."""


class NumericError(RotatorError, ArithmeticError):
    """A derivative or bracket came out non-finite."""


class IntegrationAbort(RotatorError):
    """Constraint residuals exceeded the abort threshold during integration."""

    def __init__(self, message, step=None, time=None, residuals=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.residuals = residuals
