"""Correlation screening and principal-component factor analysis."""

from .correlation import (
    CorrelationMatrix,
    MissingPolicy,
    ScreenResult,
    corr_p_value,
    correlation_matrix,
    pearson_r,
    screen_variables,
)
from .eigen import eig_sym, sym_inverse
from .factor import (
    FactorModel,
    FactorScores,
    Rotation,
    communalities,
    explained_variance,
    extract_principal_factors,
    fit_factor_model,
    kaiser_count,
    kmo_statistic,
    regression_factor_scores,
    varimax_criterion,
    varimax_rotate,
)
from .special import betainc, t_two_sided_p

__all__ = [
    "CorrelationMatrix",
    "FactorModel",
    "FactorScores",
    "MissingPolicy",
    "Rotation",
    "ScreenResult",
    "betainc",
    "communalities",
    "corr_p_value",
    "correlation_matrix",
    "eig_sym",
    "explained_variance",
    "extract_principal_factors",
    "fit_factor_model",
    "kaiser_count",
    "kmo_statistic",
    "pearson_r",
    "regression_factor_scores",
    "screen_variables",
    "sym_inverse",
    "t_two_sided_p",
    "varimax_criterion",
    "varimax_rotate",
]
