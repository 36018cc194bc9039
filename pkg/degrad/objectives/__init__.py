"""
Objectives package: local objectives, ensembles and mean Hessian kernels.
"""

from .ensemble import (
    HeterogeneityReport,
    ObjectiveEnsemble,
    OptimumReport,
    ensemble_from_dict,
    grad_stack,
    heterogeneity,
    make_linear_regression,
    make_logistic,
    make_quadratic,
    make_quadratic_centered,
    random_quadratic_ensemble,
    sample_stochastic_grad,
    solve_optimum,
)
from .functions import (
    LinearRegressionObjective,
    LocalObjective,
    LogisticRidgeObjective,
    QuadraticObjective,
    finite_difference_gradient,
    first_order_checks,
)
from .mht import MhtKernel, mht_kernel

__all__ = [
    "HeterogeneityReport",
    "LinearRegressionObjective",
    "LocalObjective",
    "LogisticRidgeObjective",
    "MhtKernel",
    "ObjectiveEnsemble",
    "OptimumReport",
    "QuadraticObjective",
    "ensemble_from_dict",
    "finite_difference_gradient",
    "first_order_checks",
    "grad_stack",
    "heterogeneity",
    "make_linear_regression",
    "make_logistic",
    "make_quadratic",
    "make_quadratic_centered",
    "mht_kernel",
    "random_quadratic_ensemble",
    "sample_stochastic_grad",
    "solve_optimum",
]
