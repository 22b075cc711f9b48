"""Explicit solutions of the finite-horizon expert-prediction game for 3 and 4 experts.

Closed-form value functions and their derivatives, PDE and inequality checks,
an exact minimax solver for the discrete game, and Monte Carlo simulators.
"""
from .core import ALPHA, THETA, ExpertSubset, RankedState, comb_subset, rank_state
from .errors import BudgetError, DomainError, NumericError
from .value3 import EvalPoint3, geometric_value3, gradient3, value3
from .value4 import (EvalPoint, QuadratureConfig, dt_value4, geometric_value4, gradient4,
                     hessian4, hessian4_from_sl, hessian4_integral, sl_profile, value4)

__version__ = "0.1.0"

__all__ = [
    "ALPHA", "THETA", "ExpertSubset", "RankedState", "comb_subset", "rank_state",
    "BudgetError", "DomainError", "NumericError",
    "EvalPoint3", "geometric_value3", "gradient3", "value3",
    "EvalPoint", "QuadratureConfig", "dt_value4", "geometric_value4", "gradient4",
    "hessian4", "hessian4_from_sl", "hessian4_integral", "sl_profile", "value4",
]
