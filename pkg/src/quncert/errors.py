"""Exception types raised across the library.

Every error is a subclass of :class:`QuncertError`, so callers can catch
domain failures with a single except clause while still distinguishing
individual conditions.
"""


class QuncertError(Exception):
    """Base class for all quncert errors."""


class NonPowerOfTwoError(QuncertError):
    """Grid size is not a power of two (or is below the minimum of 8)."""


class EmptyIntervalError(QuncertError):
    """Grid interval has zero or negative length."""


class ZeroNormError(QuncertError):
    """Amplitudes have zero norm and cannot be normalized."""


class GridMismatchError(QuncertError):
    """Two objects that must share a grid do not."""


class NonPositiveSigmaError(QuncertError):
    """A width parameter that must be positive is not."""


class BoundaryLeakageError(QuncertError):
    """State does not decay at the grid edges; spectral results would wrap."""


class NegativeQuantumNumberError(QuncertError):
    """Oscillator quantum number below zero."""


class EmptyTermListError(QuncertError):
    """Superposition built from no terms."""


class BoundViolationError(QuncertError):
    """Variance product fell below the quantum bound.

    The bound is a theorem, so this always signals numerical
    misconfiguration (grid too coarse or too narrow), never physics.
    """


class IndexOutOfRangeError(QuncertError, IndexError):
    """Group index outside the ensemble."""


class WeightSumError(QuncertError):
    """Ensemble weights are nonpositive or do not sum to one."""


class CountInconsistencyError(QuncertError):
    """Supplied subsystem counts disagree with each other or with weights."""


class DegenerateVarianceError(QuncertError):
    """A variance that must be positive is zero."""


class InsufficientSamplesError(QuncertError):
    """Too few samples for the requested estimator."""


class NegativeSpreadError(QuncertError):
    """Energy spread below zero passed to the time-window formula."""


class ScenarioParseError(QuncertError):
    """Scenario text is malformed. Carries a 1-based source position."""

    def __init__(self, line, column, message):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class UnknownReferenceError(QuncertError):
    """Scenario references a state or ensemble that was never declared."""

    def __init__(self, name, where=""):
        suffix = f" ({where})" if where else ""
        super().__init__(f"unknown reference {name!r}{suffix}")
        self.name = name
