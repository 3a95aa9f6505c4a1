"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: :class:`DataError` gives 3 and every
:class:`NumericalError` gives 4.
"""


class FCARError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(FCARError, ValueError):
    """An argument violates a documented precondition."""


class InsufficientSampleError(InvalidArgumentError):
    """Too few curves for the requested order or fold scheme."""


class DataError(FCARError):
    """Malformed input data (CSV contents, model files, descriptors)."""


class UnsupportedError(FCARError):
    """The requested operation is unavailable for this input."""


class NotInRKHSError(InvalidArgumentError):
    """A function does not belong to the Brownian RKHS (f(0) != 0)."""


class NumericalError(FCARError):
    """Base class for failures of the numerical routines."""


class SingularMatrixError(NumericalError):
    """Cholesky pivot fell below tolerance.

    Attributes
    ----------
    pivot : float
        The offending pivot (Schur complement of the failing column).
    index : int
        Column at which factorization failed.
    """

    def __init__(self, message, pivot=float("nan"), index=-1):
        super().__init__(message)
        self.pivot = pivot
        self.index = index


class SelectionExhaustedError(NumericalError):
    """No admissible candidate is left for a greedy step."""


class InstabilityError(NumericalError):
    """A simulated recursion diverged."""
