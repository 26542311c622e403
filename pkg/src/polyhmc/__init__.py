"""Sampling on polytopes with the log-barrier metric.

The package implements a Riemannian HMC variant whose Metropolis filter is
preceded by an involution check: the generalized-leapfrog proposal is
accepted for consideration only if running it again from the flipped output
returns to the start within a tolerance, which removes the bias the
implicit integrator would otherwise introduce.  Baseline samplers (MALA,
independence MH on the simplex), diagnostics (effective sample size,
replicate confidence intervals, a closed-form truncated-Gaussian oracle),
property check suites, and a CLI round out the toolkit.
"""

from .barrier import (
    CholeskyFailure,
    Infeasible,
    MetricState,
    NoConvergence,
    Polytope,
    analytic_center,
    barrier_gradient,
    barrier_value,
    chebyshev_center,
    grad_log_det,
    load_polytope,
    make_preset,
    metric_directional_deriv,
    metric_state,
    slack,
)
from .baselines import (
    ImhConfig,
    MalaConfig,
    imh_step,
    mala_step,
    run_imh,
    run_mala,
    sample_uniform_simplex,
)
from .diagnostics import (
    FunctionalSeries,
    ReplicateSummary,
    ess,
    mu_vector,
    q_functional,
    replicate_ci,
    truncated_box_gaussian_mean,
)
from .hamiltonian import (
    PhasePoint,
    effective_potential,
    grad_effective_potential,
    grad_p_kinetic,
    grad_x_kinetic,
    hamiltonian,
    kinetic_energy,
    phase_norm,
    refresh_momentum,
    sample_momentum,
)
from .integrator import (
    DomainFailure,
    InvolutionResult,
    LeapfrogConfig,
    involution_check,
    involution_map,
    leapfrog_step,
    proposal,
)
from .sampler import (
    AdaptConfig,
    ChainConfig,
    ChainRecord,
    ChainStats,
    ChainTrace,
    InfeasibleStart,
    adapt_step_size,
    mh_accept,
    run_chain,
)
from .targets import GaussianTarget, UniformTarget

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "ChainConfig",
    "ChainRecord",
    "ChainStats",
    "ChainTrace",
    "CholeskyFailure",
    "DomainFailure",
    "FunctionalSeries",
    "GaussianTarget",
    "ImhConfig",
    "Infeasible",
    "InfeasibleStart",
    "InvolutionResult",
    "LeapfrogConfig",
    "MalaConfig",
    "MetricState",
    "NoConvergence",
    "PhasePoint",
    "Polytope",
    "ReplicateSummary",
    "UniformTarget",
    "adapt_step_size",
    "analytic_center",
    "barrier_gradient",
    "barrier_value",
    "chebyshev_center",
    "effective_potential",
    "ess",
    "grad_effective_potential",
    "grad_log_det",
    "grad_p_kinetic",
    "grad_x_kinetic",
    "hamiltonian",
    "imh_step",
    "involution_check",
    "involution_map",
    "kinetic_energy",
    "leapfrog_step",
    "load_polytope",
    "make_preset",
    "mala_step",
    "metric_directional_deriv",
    "metric_state",
    "mh_accept",
    "mu_vector",
    "phase_norm",
    "proposal",
    "q_functional",
    "refresh_momentum",
    "replicate_ci",
    "run_chain",
    "run_imh",
    "run_mala",
    "sample_momentum",
    "sample_uniform_simplex",
    "slack",
    "truncated_box_gaussian_mean",
]
