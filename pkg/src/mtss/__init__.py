"""Mixtures of tempered stable subordinators.

Exact samplers, branch-cut and Laplace-inversion densities, moment calculus,
Tauberian asymptotics, and residual checks of the governing fractional
Fokker-Planck equations, for subordinators with Laplace exponent

    phi(s) = sum_i c_i ((s + lam_i)**alpha_i - lam_i**alpha_i).
"""

from mtss.core import (
    AsymptoteDiagnostic,
    AsymptoticRegime,
    BranchCutError,
    MixtureParams,
    MomentDivergenceError,
    ParameterError,
    RegimeError,
    TemperedComponent,
    asymptotic_fractional_moment,
    cumulant,
    fractional_moment,
    laplace_exponent,
    mean_rate,
    potential_density_asymptote,
    raw_moment,
    renewal_asymptote,
    inverse_moment_asymptote,
    tss_tail_asymptote,
)
from mtss.fpk import (
    GridFunction,
    GridResolutionError,
    PmfVector,
    TruncationError,
    fpk_residual_imtss,
    fpk_residual_mtss,
    fpk_verification_report,
    pgf_mtsfpp,
    pmf_mtsfpp,
    pmf_mttfpp,
    pmf_ode_residual_mtsfpp,
    shifted_fractional_derivative,
    tcbm_transform_check,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoteDiagnostic",
    "AsymptoticRegime",
    "BranchCutError",
    "MixtureParams",
    "MomentDivergenceError",
    "ParameterError",
    "RegimeError",
    "TemperedComponent",
    "asymptotic_fractional_moment",
    "cumulant",
    "fractional_moment",
    "laplace_exponent",
    "mean_rate",
    "potential_density_asymptote",
    "raw_moment",
    "renewal_asymptote",
    "inverse_moment_asymptote",
    "tss_tail_asymptote",
    "GridFunction",
    "GridResolutionError",
    "PmfVector",
    "TruncationError",
    "fpk_residual_imtss",
    "fpk_residual_mtss",
    "fpk_verification_report",
    "pgf_mtsfpp",
    "pmf_mtsfpp",
    "pmf_mttfpp",
    "pmf_ode_residual_mtsfpp",
    "shifted_fractional_derivative",
    "tcbm_transform_check",
    "__version__",
]
