"""Numerical upper bounds on restoration entropy of dynamical systems.

The toolkit optimizes conformal Riemannian metrics P(x) = e^{r_a(x)} p
over the product manifold R^N x S+_n with a Riemannian subgradient
method, yielding certified (up to grid error) upper bounds on the
restoration entropy of discrete maps and flows on compact trapping
regions.
"""
from .objective import (ConformalMetric, DomainAssumptionError,
                        GridWorkspace, InnerMaxResult, entropy_estimate,
                        identity_metric, maximize, metric_geodesic)
from .optimizer import (IterationError, IterationRecord, RunResult,
                        StepRule, evaluate_metric, run, step)
from .poly import ORDERING_TAG, PolyBasis, PolyCoeffs
from .subgrad import TangentVector, full_subgradient
from .systems import (SystemCase, available_systems, bouncing_ball_case,
                      bouncing_ball_entropy, get_case, henon_bounds,
                      henon_case, lorenz_case, lorenz_entropy,
                      lorenz_reference_metric, register_system)

__version__ = "0.1.0"

__all__ = [
    "ConformalMetric", "DomainAssumptionError", "GridWorkspace",
    "InnerMaxResult", "IterationError", "IterationRecord", "ORDERING_TAG",
    "PolyBasis", "PolyCoeffs", "RunResult", "StepRule", "SystemCase",
    "TangentVector", "available_systems", "bouncing_ball_case",
    "bouncing_ball_entropy", "entropy_estimate", "evaluate_metric",
    "full_subgradient", "get_case", "henon_bounds", "henon_case",
    "identity_metric", "lorenz_case", "lorenz_entropy",
    "lorenz_reference_metric", "maximize", "metric_geodesic",
    "register_system", "run", "step",
]
