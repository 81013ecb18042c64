"""Norms, convergence studies and empirical verification suites."""

from .norms import (
    broken_lp_norm,
    dg_norm,
    discrete_norms,
    grad_recon_lp_norm,
    gradient_error,
    norm_1ph,
)
from .studies import ConvergenceTable, convergence_study, fit_slope

__all__ = [
    "ConvergenceTable",
    "broken_lp_norm",
    "convergence_study",
    "dg_norm",
    "discrete_norms",
    "fit_slope",
    "grad_recon_lp_norm",
    "gradient_error",
    "norm_1ph",
]
