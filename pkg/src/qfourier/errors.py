"""Exception hierarchy shared by every module of the package."""


class QFourierError(Exception):
    """Base class for all errors raised by :mod:`qfourier`."""


class DomainError(QFourierError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class InadmissibleParameterError(DomainError):
    """Family parameters violate an admissibility constraint (e.g. ``a >= a_max``)."""


class IntegrandError(QFourierError, ArithmeticError):
    """The integrand returned NaN; carries the offending abscissa."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class ConvergenceError(QFourierError, ArithmeticError):
    """A numerical integral did not reach its requested tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IllConditionedError(QFourierError, ArithmeticError):
    """Two independent numerical estimates of the same quantity disagree."""


class IllConditionedWarning(RuntimeWarning):
    """Branch evaluation inside a transition band disagreed with its neighbour."""


class InversionError(QFourierError):
    """Base class for failures of the hidden-parameter recovery."""


class TargetOutOfRangeError(InversionError, ValueError):
    def __init__(self, message, attainable):
        super().__init__(message)
        self.attainable = attainable


class NonMonotoneError(InversionError):
    """The forward map was observed to be non-monotone on the search interval."""


class InconsistentSamplesError(InversionError, ValueError):
    """Transform samples are not consistent with a single ``cos_q(lambda * xi)``."""


class OutsideMonotoneWindowError(InversionError, ValueError):
    """A transform sample carries no information about ``lambda``."""
