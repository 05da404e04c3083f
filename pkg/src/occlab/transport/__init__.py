"""Wasserstein costs between atomic measures and Fourier-analytic surrogates."""

from occlab.transport.problem import (
    TransportProblem,
    TransportPlan,
    SolveReport,
    MassMismatchError,
    SizeCapExceeded,
    cost_matrix,
)
from occlab.transport.exact import wasserstein_exact, wasserstein_bruteforce
from occlab.transport.entropic import wasserstein_entropic, EpsilonSchedule
from occlab.transport.uniform import wasserstein_to_uniform, check_subadditivity
from occlab.transport.fourier import (
    ball_indicator_fourier,
    fourier_coefficients,
    smoothed_coefficients,
    sobolev_upper_bound,
)

__all__ = [
    "TransportProblem",
    "TransportPlan",
    "SolveReport",
    "MassMismatchError",
    "SizeCapExceeded",
    "cost_matrix",
    "wasserstein_exact",
    "wasserstein_bruteforce",
    "wasserstein_entropic",
    "EpsilonSchedule",
    "wasserstein_to_uniform",
    "check_subadditivity",
    "ball_indicator_fourier",
    "fourier_coefficients",
    "smoothed_coefficients",
    "sobolev_upper_bound",
]
