"""Parsimonious multivariate volatility models.

Diagonal GARCH(1,1) variances, a correlation recursion mixing a fixed
long-run correlation, the local correlation of the last ``m`` standardized
innovations and the previous correlation matrix, multivariate Student-t
innovations and optional leverage terms, estimated jointly by constrained
maximum likelihood.
"""

from .baselines import DCCE, DCCT, DccEParams, DccTParams, rolling_covariance
from .data import ReturnPanel, align_panels, describe, read_panel, simple_returns, write_panel
from .diagnostics import adequacy_report, bootstrap_critical_values
from .estimator import FitResult, MultivariateGarch, ParamMapping, lr_test
from .meanmodel import VAR, fit_var, multivariate_ljung_box
from .simulate import SimulationConfig, sample_mvt, simulate
from .volcore import FilterState, ModelParams, VolatilityPath, negative_log_likelihood, run_filter

__version__ = "0.1.0"

__all__ = [
    "DCCE", "DCCT", "DccEParams", "DccTParams", "FilterState", "FitResult",
    "ModelParams", "MultivariateGarch", "ParamMapping", "ReturnPanel",
    "SimulationConfig", "VAR", "VolatilityPath", "adequacy_report", "align_panels",
    "bootstrap_critical_values", "describe", "fit_var", "lr_test",
    "multivariate_ljung_box", "negative_log_likelihood", "read_panel",
    "rolling_covariance", "run_filter", "sample_mvt", "simple_returns", "simulate",
    "write_panel",
]
