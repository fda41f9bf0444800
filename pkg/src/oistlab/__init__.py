"""Numerical laboratory for online (sparse) PCA on spiked-covariance streams.

Four mutually validating routes to the same dynamics: Monte Carlo
simulation of the online estimator, the deterministic drift-diffusion
scaling limit, closed-form overlap dynamics for the plain Oja case,
and the stationary fixed-point system with its SNR phase transition.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateStateError,
    NonNormalizableError,
    NumericError,
    OistlabError,
    StabilityError,
)
from .nonlinearity import SoftThreshold, eta_map, phi_eval
from .oja import OjaParams, closed_form_q, ode_q, steady_state_q
from .priors import (
    Prior,
    SampleStreamConfig,
    SignalVector,
    discretize_prior,
    draw_samples,
    draw_signal,
    next_sample,
)
from .simulate import (
    AlgoConfig,
    EstimateState,
    TrajectoryRecord,
    cosine_similarity,
    joint_histogram,
    misclassification_rate,
    oist_step,
    run_trajectory,
)
from .steady import (
    FixedPoint,
    SteadyConfig,
    erfcx_scaled,
    fixed_point_map,
    fixed_point_map_quadrature,
    solve_fixed_point,
    steady_density,
    sweep_omega,
)

__all__ = [
    "__version__",
    "AlgoConfig",
    "ConfigError",
    "DegenerateStateError",
    "EstimateState",
    "FixedPoint",
    "NonNormalizableError",
    "NumericError",
    "OistlabError",
    "OjaParams",
    "Prior",
    "SampleStreamConfig",
    "SignalVector",
    "SoftThreshold",
    "StabilityError",
    "SteadyConfig",
    "TrajectoryRecord",
    "closed_form_q",
    "cosine_similarity",
    "discretize_prior",
    "draw_samples",
    "draw_signal",
    "erfcx_scaled",
    "eta_map",
    "fixed_point_map",
    "fixed_point_map_quadrature",
    "joint_histogram",
    "misclassification_rate",
    "next_sample",
    "ode_q",
    "oist_step",
    "phi_eval",
    "run_trajectory",
    "solve_fixed_point",
    "steady_density",
    "steady_state_q",
    "sweep_omega",
]
