"""Unconstrained features models: closed-form minimizers, gradient descent and collapse metrics."""

from .analytic import (OracleSolution, collapse_constant, ridge_weights, theorem1_minimizer,
                       theorem2_minimizer, theorem3_minimizer, theorem4_minimizer,
                       two_layer_singular_values)
from .core import Frame, NumericalError, ProblemDims, build_label_matrix, general_simplex_etf
from .metrics import NCReport, nc_report
from .models import BiasMode, Hyperparams, PlainState, TwoLayerState, Variant, evaluate
from .optim import DivergenceError, InitSpec, OptimConfig, Trace, gradient_descent, init_state

__version__ = "0.1.0"

__all__ = [
    "BiasMode", "DivergenceError", "Frame", "Hyperparams", "InitSpec", "NCReport", "NumericalError",
    "OptimConfig", "OracleSolution", "PlainState", "ProblemDims", "Trace", "TwoLayerState", "Variant",
    "build_label_matrix", "collapse_constant", "evaluate", "general_simplex_etf", "gradient_descent",
    "init_state", "nc_report", "ridge_weights", "theorem1_minimizer", "theorem2_minimizer",
    "theorem3_minimizer", "theorem4_minimizer", "two_layer_singular_values",
]
