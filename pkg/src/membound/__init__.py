"""Optimal interpolating lower bounds and gradient methods with memory."""
from .bound import (BoundEvaluation, BundleModel, OptimalLowerBound, OracleRecord, aggregate, envelope_p_oracle_1d,
                    eval_p, interpolability_check, rho, simplex_brute_force_p, tilt)
from .methods import FirstOrderMinimizer, run_method
from .metric import Metric, Parabola, dual_norm_sq, parabola_eval
from .problems import Problem, estimate_fstar, make_lrsp, make_quad
from .simplex_qp import FRANK_WOLFE, PROJECTED_ACCELERATED, SimplexQP, SubsolverConfig, project_simplex, solve

__version__ = "0.1.0"

__all__ = [
    "BoundEvaluation", "BundleModel", "FRANK_WOLFE", "FirstOrderMinimizer", "Metric", "OptimalLowerBound", "OracleRecord",
    "PROJECTED_ACCELERATED", "Parabola", "Problem", "SimplexQP", "SubsolverConfig",
    "aggregate", "dual_norm_sq", "envelope_p_oracle_1d", "estimate_fstar", "eval_p", "interpolability_check",
    "make_lrsp", "make_quad", "parabola_eval", "project_simplex", "rho", "run_method", "simplex_brute_force_p", "solve", "tilt",
]
