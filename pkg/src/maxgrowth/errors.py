"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`MaxGrowthError`, so callers can catch the whole family at once.
Where a built-in exception has the right meaning (``ValueError`` for bad
shapes, ``OverflowError`` for range problems) the package error also
inherits from it.
"""


class MaxGrowthError(Exception):
    """Base class for all package errors."""


class DimensionError(MaxGrowthError, ValueError):
    """Operands do not conform."""


class SingularMatrixError(MaxGrowthError, ArithmeticError):
    """A factorization met a zero (or sub-tolerance) pivot.

    ``pivot`` is the 0-based column index of the offending pivot when it is
    known, else ``None``.
    """

    def __init__(self, msg, pivot=None):
        super().__init__(msg)
        self.pivot = pivot


class DefinitenessError(MaxGrowthError, ValueError):
    """A matrix expected to be positive definite is not.

    ``pivot`` is the 0-based index of the first leading minor that failed.
    """

    def __init__(self, msg, pivot=None):
        super().__init__(msg)
        self.pivot = pivot


class RangeError(MaxGrowthError, OverflowError):
    """A result would overflow double precision."""


class ConvergenceError(MaxGrowthError):
    """An iteration hit its limit; ``estimate`` holds the best value so far."""

    def __init__(self, msg, estimate=None, vector=None):
        super().__init__(msg)
        self.estimate = estimate
        self.vector = vector


class InstabilityError(MaxGrowthError, ArithmeticError):
    """Time integration diverged."""


class DenseGuardError(MaxGrowthError, MemoryError):
    """Refused to form a dense matrix above the size guard."""


class NotDiagonalizableError(MaxGrowthError, ArithmeticError):
    """Eigenvector matrix is numerically singular."""


class UnsupportedStructureError(MaxGrowthError, ValueError):
    """Input lacks the structure an algorithm relies on."""


class ParseError(MaxGrowthError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, msg, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + msg)
        self.path = path
        self.line = line
