"""Rational covariance extension on the discrete circle.

Scalar and block periodic ARMA models that match a finite window of
covariance lags, their integer-line counterpart, spectral factorization of
(matrix) pseudo-polynomials and a banded two-sweep smoother built on them.
"""
import logging

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    BandViolationError,
    ConvergenceError,
    CrcepError,
    DegenerateScalingError,
    DimensionError,
    FactorizationError,
    InfeasibleAtNError,
    NotPositiveDefiniteError,
    SingularSymbolError,
)
from .dft import BandedCirculant, DiscreteCircle, Spectrum, circ_solve, dft, idft  # noqa: E402
from .spectral_factor import (  # noqa: E402
    PseudoPolynomial,
    SchurPolynomial,
    is_positive_circle,
    is_positive_discrete,
    matrix_schur_factor,
    schur_factor,
)
from .toeplitz import CovarianceData, levinson, levinson_whittle, toeplitz_pd  # noqa: E402
from .solver import SolveReport, SolverConfig  # noqa: E402
from .periodic import PeriodicArmaModel, solve  # noqa: E402
from .line import LineArmaModel, solve_line  # noqa: E402
from .vector import VectorPeriodicArmaModel, solve_vec  # noqa: E402
from .smoother import (  # noqa: E402
    ObservationChannel,
    SmoothingProblem,
    StateSpaceModel,
    direct_smooth_oracle,
    lyapunov_lags,
    smooth,
)
from .estimators import (  # noqa: E402
    LineCovarianceExtension,
    PeriodicCovarianceExtension,
    PeriodicSmoother,
    VectorCovarianceExtension,
)

__all__ = [
    "__version__",
    "BandViolationError",
    "ConvergenceError",
    "CrcepError",
    "DegenerateScalingError",
    "DimensionError",
    "FactorizationError",
    "InfeasibleAtNError",
    "NotPositiveDefiniteError",
    "SingularSymbolError",
    "BandedCirculant",
    "DiscreteCircle",
    "Spectrum",
    "circ_solve",
    "dft",
    "idft",
    "PseudoPolynomial",
    "SchurPolynomial",
    "is_positive_circle",
    "is_positive_discrete",
    "matrix_schur_factor",
    "schur_factor",
    "CovarianceData",
    "levinson",
    "levinson_whittle",
    "toeplitz_pd",
    "SolveReport",
    "SolverConfig",
    "PeriodicArmaModel",
    "solve",
    "LineArmaModel",
    "solve_line",
    "VectorPeriodicArmaModel",
    "solve_vec",
    "ObservationChannel",
    "SmoothingProblem",
    "StateSpaceModel",
    "direct_smooth_oracle",
    "lyapunov_lags",
    "smooth",
    "LineCovarianceExtension",
    "PeriodicCovarianceExtension",
    "PeriodicSmoother",
    "VectorCovarianceExtension",
]

logging.getLogger(__name__).addHandler(logging.NullHandler())
