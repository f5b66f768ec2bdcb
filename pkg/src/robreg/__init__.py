"""robreg: robust linear regression with redescending M-estimators.

Bounded-loss (S and MM) regression estimators with high breakdown point,
normal-theory inference for linear contrasts, design-conditioning
diagnostics, and a Monte Carlo harness that checks the estimators'
large-sample behaviour when the number of parameters grows with the sample
size.
"""

from .exceptions import (
    AssumptionError,
    ConfigurationError,
    DegenerateDesignError,
    KernelCapabilityError,
    RobregError,
    ScaleConvergenceError,
)
from .kernels import RhoKernel, irls_weight, psi, psi_double_prime, psi_prime, rho, verify_rho_axioms
from .mscale import MScaleSpec, m_scale, scale_equation
from .problem import FitResult, RegressionProblem, fit_least_squares
from .sfit import SFitConfig, concentration_step, fit_s
from .mmfit import MMFitConfig, build_mm_configs, fit_mm, fit_mm_given_scale, objective_ln
from .inference import (
    Cauchy,
    ContaminatedGaussian,
    ContrastInference,
    Gaussian,
    PlugInEmpirical,
    QuadratureMoments,
    asymptotic_moments,
    contrast_inference,
    expected_loss_profile,
    expected_rho,
    plug_in_moments,
    population_scale,
)
from .diagnostics import (
    DesignReport,
    check_conditions,
    eta_n_bounds,
    eta_n_exact,
    spectrum_bounds,
    truncated_gram_check,
)
from .simulate import (
    BadLeverage,
    Contamination,
    ExperimentReport,
    FixedDim,
    GaussianIdentity,
    GaussianToeplitz,
    LogDim,
    LSBaselineSpec,
    MMEstimatorSpec,
    PowerDim,
    RepRow,
    ScaleMixture,
    ScenarioConfig,
    SEstimatorSpec,
    Vertical,
    generate_scenario,
    run_breakdown_experiment,
    run_normality_experiment,
    run_rate_experiment,
    run_scale_consistency_experiment,
    run_uniform_convergence_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
