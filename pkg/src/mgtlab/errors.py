"""Exception hierarchy shared by every mgtlab module."""

__all__ = [
    "MGTError",
    "ParameterDomainError",
    "ShapeError",
    "UnsupportedRegimeError",
    "NumericalFailure",
    "ClassificationError",
    "InternalConsistencyError",
    "RangeError",
    "ResolutionError",
    "HorizonError",
    "InvariantViolation",
    "ConfigError",
]


class MGTError(Exception):
    """Base class for all errors raised by mgtlab."""


class ParameterDomainError(MGTError, ValueError):
    """A coefficient or parameter lies outside its admissible range."""


class ShapeError(MGTError, ValueError):
    """State length or layout does not match the modal basis."""


class UnsupportedRegimeError(MGTError, ValueError):
    """The requested computation is not defined for gamma_tau < 0 (or = 0)."""


class NumericalFailure(MGTError, ArithmeticError):
    """A root polish or linear solve did not reach its tolerance.

    ``raw`` carries the unpolished values (e.g. companion-matrix eigenvalues).
    """

    def __init__(self, message, raw=None):
        super().__init__(message)
        self.raw = raw


class ClassificationError(MGTError):
    """Branch continuation found two equally good assignments."""

    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = tuple(modes)


class InternalConsistencyError(MGTError, AssertionError):
    """An algebraic cross-check (division identity, energy expansion) failed."""


class RangeError(MGTError, OverflowError):
    """Propagation would overflow (extreme backward times)."""


class ResolutionError(MGTError):
    """Quadrature error estimate exceeds tolerance; refine the time grid."""


class HorizonError(MGTError):
    """Trajectory too short for the requested tail bound."""


class InvariantViolation(MGTError, AssertionError):
    """A certified inequality failed at some sample."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class ConfigError(MGTError, ValueError):
    """Configuration text is malformed or violates module preconditions.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
