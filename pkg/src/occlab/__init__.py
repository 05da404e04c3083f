"""Monte Carlo laboratory for Brownian occupation measures and transport costs.

Simulates Brownian motion on R^d and the flat torus, samples Brownian
interlacement occupation measures, and computes Wasserstein costs of order p
against the uniform measure (exact, brute-force, and entropic solvers plus
Fourier surrogates).  Experiment pipelines estimate the large-time / large-
intensity normalized limits and validate closed-form laws at desk scale.
"""

from occlab.rng import SeedSpec
from occlab.geometry import (
    Space,
    Domain,
    WeightedAtoms,
    flat_distance,
    dilate_measure,
    translate_measure,
    restrict_measure,
    uniform_discretization,
)

__version__ = "0.1.0"

__all__ = [
    "SeedSpec",
    "Space",
    "Domain",
    "WeightedAtoms",
    "flat_distance",
    "dilate_measure",
    "translate_measure",
    "restrict_measure",
    "uniform_discretization",
    "__version__",
]
