"""Count regression with explicit zero alteration and over-dispersion.

The package couples base count families (Poisson, two Negative Binomial
parameterizations) with four one-parameter zero-alteration links, and
provides maximum-likelihood fitting, simulation, and zero-probability
diagnostics plus a command-line front end (``zicount``).
"""

from .data import (
    CellSummary,
    CellSummaryTable,
    CountDataset,
    cell_summaries,
    load_trajan,
    read_csv,
    write_csv,
)
from .diagnostics import (
    AicRow,
    CellFitRow,
    CurveTable,
    GridSpec,
    ZeroDiagnostic,
    aic_table,
    empirical_zero_diagnostic,
    fitted_vs_observed,
    zero_curve,
)
from .distributions import (
    BaseModel,
    Family,
    base_logpmf,
    base_mean,
    base_variance,
    base_zero_prob,
    truncated_poisson_logpmf,
    truncated_poisson_mean,
)
from .exceptions import (
    ConvergenceError,
    DataError,
    DeflationInfeasibleError,
    InvalidParameterError,
    NonFiniteError,
    NoSolutionError,
    SeparationWarning,
    SingularHessianError,
)
from .fit import (
    FitOptions,
    FitResult,
    fit_mle,
    fit_type_a_twopart,
    nb_phi_mle,
    nb_phi_moment,
    nb_phi_zero_frequency,
    standard_errors,
    vcov_numeric,
)
from .likelihood import (
    DesignSpec,
    ModelSpec,
    ParamLayout,
    analytic_score,
    build_design,
    has_analytic_score,
    loglik,
    loglik_decomposed,
    param_layout,
    score_numeric,
    type_d_logpmf,
    type_d_naturals,
)
from .links import (
    ZiModel,
    ZiType,
    implicit_zi_curve,
    match_dispersion_through_point,
    model_zero_prob,
    renormalizer,
    zi_gamma_from_point,
    zi_logpmf,
    zi_mean,
    zi_zero_prob,
)
from .simulate import SimPlan, simulate

__version__ = "0.1.0"

__all__ = [
    "AicRow",
    "BaseModel",
    "CellFitRow",
    "CellSummary",
    "CellSummaryTable",
    "ConvergenceError",
    "CountDataset",
    "CurveTable",
    "DataError",
    "DeflationInfeasibleError",
    "DesignSpec",
    "Family",
    "FitOptions",
    "FitResult",
    "GridSpec",
    "InvalidParameterError",
    "ModelSpec",
    "NoSolutionError",
    "NonFiniteError",
    "ParamLayout",
    "SeparationWarning",
    "SimPlan",
    "SingularHessianError",
    "ZeroDiagnostic",
    "ZiModel",
    "ZiType",
    "aic_table",
    "analytic_score",
    "base_logpmf",
    "base_mean",
    "base_variance",
    "base_zero_prob",
    "build_design",
    "cell_summaries",
    "empirical_zero_diagnostic",
    "fit_mle",
    "fit_type_a_twopart",
    "fitted_vs_observed",
    "has_analytic_score",
    "implicit_zi_curve",
    "load_trajan",
    "loglik",
    "loglik_decomposed",
    "match_dispersion_through_point",
    "model_zero_prob",
    "nb_phi_mle",
    "nb_phi_moment",
    "nb_phi_zero_frequency",
    "param_layout",
    "read_csv",
    "renormalizer",
    "score_numeric",
    "simulate",
    "standard_errors",
    "truncated_poisson_logpmf",
    "truncated_poisson_mean",
    "type_d_logpmf",
    "type_d_naturals",
    "vcov_numeric",
    "write_csv",
    "zero_curve",
    "zi_gamma_from_point",
    "zi_logpmf",
    "zi_mean",
    "zi_zero_prob",
]
