"""Exception types shared across the package."""


class MobiusGreenError(Exception):
    """Base class for all errors raised by this package."""


class BoundaryUnderflowError(MobiusGreenError, ArithmeticError):
    """A point that must lie in the upper half-plane lost its imaginary part.

    Raised instead of clamping, so that moment blow-ups stay visible.
    """


class DegenerateDenominatorError(MobiusGreenError, ZeroDivisionError):
    pass


class NumericalDegeneracyError(MobiusGreenError, ArithmeticError):
    pass


class OutOfBandError(MobiusGreenError, ValueError):
    """Spectral parameter lies outside the band where a fixed point is in H."""


class IndeterminateError(MobiusGreenError, ZeroDivisionError):
    """A contraction ratio was evaluated at 0/0."""


class KernelConditionError(MobiusGreenError, ValueError):
    def __init__(self, sphere, message=None):
        self.sphere = sphere
        super().__init__(message or f"E_{sphere} has a nontrivial kernel")


class CapExceededError(MobiusGreenError, ValueError):
    """Requested truncation exceeds the desk-scale size caps."""


class InadmissibleModelError(MobiusGreenError, ValueError):
    pass


class ConfigError(MobiusGreenError, ValueError):
    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)
