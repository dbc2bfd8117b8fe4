"""Numerical laboratory for the two-component reaction-diffusion-ODE system

    u_t = d*Lap(u) - a*u + u^p f(v)
    v_t = D*Lap(v) - b*v - u^p f(v) + kappa

on a symmetric 1-D interval with homogeneous Neumann conditions. With both
diffusions positive all nonnegative solutions stay global; removing the
u-diffusion (d = 0) lets carefully concentrated data blow up in finite time
at a single point. The package simulates both regimes and checks every
quantitative bound of the analysis (mass control, v ceiling and floor,
pointwise envelope, blow-up time bounds) as a runtime monitor.
"""

from .analysis import (
    AlphaInadmissible,
    BoundContext,
    DiagnosticTrace,
    FloorNotPositive,
    Monitor,
    NotIntegrable,
    alpha_admissible,
    blowup_time_upper_bound,
    build_bound_context,
    envelope_check,
    holder_modulus,
    mass_bound,
    mass_functional,
    standard_monitors,
    v_ceiling_check,
    v_floor_check,
    weighted_lq_norm,
)
from .core import (
    ConstraintViolation,
    DomainError,
    Grid1D,
    Kinetics,
    Params,
    SizeMismatch,
    State,
    validate_params,
)
from .harness import (
    ConcentratedScenario,
    ConfigError,
    ConstantScenario,
    ExperimentConfig,
    HypothesisViolation,
    concentrated_initial_data,
    config_from_json,
    config_to_json,
    convergence_study,
    default_config,
    parameter_sweep,
    run_dichotomy,
    run_single,
)
from .integrator import SimOutcome, SimStatus, StepControl, adapt_dt, simulate, strang_step
from .kinetics_ode import (
    BlowupInStep,
    KineticState,
    SteadyState,
    StepTooLarge,
    UnsupportedKinetics,
    dispersion_relation,
    exact_u_step,
    exact_u_step_field,
    kinetic_integrate,
    kinetic_sum_bound,
    steady_states,
)
from .spectral import NegativeTime, NeumannOperator, estimate_smoothing_constant

__version__ = "0.1.0"
