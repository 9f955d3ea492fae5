from .basic import WEIGHT_RULES, run_accelerated, run_fgm, run_gm, run_ogm_online
from .core import (ABORTED, COMPOSITE, CONVERGED, MAX_OUTER, PRIMAL, CountingOracle, EspAudit, IterationRecord,
                   RunReport, SolverAbort, SolverState, StoppingRule, esp_audit)
from .estimator import METHODS, FirstOrderMinimizer, default_tol_factor, run_method
from .memory import Bundle, crs_insert, newton_adjust, offline_final_step, omega_star, run_gmm, run_igmm, run_ogmm

__all__ = [
    "ABORTED", "COMPOSITE", "CONVERGED", "MAX_OUTER", "PRIMAL", "METHODS", "WEIGHT_RULES",
    "Bundle", "CountingOracle", "EspAudit", "FirstOrderMinimizer", "IterationRecord", "RunReport",
    "SolverAbort", "SolverState", "StoppingRule",
    "crs_insert", "default_tol_factor", "esp_audit", "newton_adjust", "offline_final_step", "omega_star",
    "run_accelerated", "run_fgm", "run_gm", "run_gmm", "run_igmm", "run_method", "run_ogm_online", "run_ogmm",
]
