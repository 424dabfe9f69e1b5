"""Exception hierarchy shared by all solvers."""


class CrcepError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(CrcepError, ValueError):
    """Input arrays have inconsistent or unsupported shapes."""


class BandViolationError(CrcepError):
    """A symbol is not banded to the requested bandwidth.

    Attributes
    ----------
    max_leak : float
        Largest out-of-band coefficient magnitude.
    """

    def __init__(self, message, max_leak):
        super().__init__(message)
        self.max_leak = max_leak


class SingularSymbolError(CrcepError, ArithmeticError):
    """A circulant symbol (or polynomial) vanishes at a node of the discrete circle."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NotPositiveDefiniteError(CrcepError, ValueError):
    """Covariance data does not define a positive definite Toeplitz matrix."""


class FactorizationError(CrcepError):
    """Spectral factorization is not possible (the pseudo-polynomial is not positive)."""


class InfeasibleAtNError(FactorizationError):
    """Positive on the 2N-point discrete circle but not on the whole unit circle.

    Increasing ``N`` usually restores feasibility.
    """

    def __init__(self, message, N=None, report=None):
        super().__init__(message)
        self.N = N
        self.report = report


class DegenerateScalingError(CrcepError, ArithmeticError):
    """The noise-variance (or scaling-matrix) formula has a vanishing denominator."""


class ConvergenceError(CrcepError):
    """An iteration did not converge within its budget.

    ``err.report`` carries the :class:`~crcep.solver.SolveReport` of the run.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
