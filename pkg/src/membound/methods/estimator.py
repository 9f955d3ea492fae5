"""Configured runs and an estimator-style front end."""
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..simplex_qp import FRANK_WOLFE, PROJECTED_ACCELERATED, SubsolverConfig
from .basic import run_fgm, run_gm, run_ogm_online
from .core import StoppingRule
from .memory import run_gmm, run_igmm, run_ogmm

METHODS = ("gm", "fgm", "ogm", "gmm", "igmm", "ogmm")
MEMORY_METHODS = ("gmm", "igmm", "ogmm")

# default inner-iteration caps per multiplier solve; None means unlimited
DEFAULT_INNER_CAP = {"gmm": None, "igmm": 20, "ogmm": 10}


def default_tol_factor(method):
    """Subsolver tolerance as a multiple of the absolute accuracy ``eps_abs``."""
    return 0.5 if method == "gmm" else 1e-3


def run_method(problem, method, bundle=1, L_scale=1.0, eps_rel=1e-4, newton_iters=2, inner_cap="default",
               weight_rule="eq89", tol_factor=None, r_u=2.0, r_d=0.5, audit=(), max_outer=10_000_000):
    """Run ``method`` on ``problem`` with the benchmark conventions.

    ``L = L_scale * L_f``; the run stops once the monitored value falls below
    ``f* + eps_rel (f(x0) - f*)``; the subsolver tolerance is
    ``tol_factor * eps_abs``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if not eps_rel > 0:
        raise ValueError("eps_rel must be positive")
    if not L_scale > 0:
        raise ValueError("L_scale must be positive")
    L = L_scale * problem.L_f
    stop = StoppingRule.relative(problem, eps_rel, max_outer=max_outer)
    if method == "gm":
        return run_gm(problem, None, L, stop)
    if method == "fgm":
        return run_fgm(problem, None, L, stop, audit=audit)
    if method == "ogm":
        return run_ogm_online(problem, None, L, stop, audit=audit)
    eps_abs = eps_rel * (problem.f0 - problem.f_star)
    factor = default_tol_factor(method) if tol_factor is None else tol_factor
    cap = DEFAULT_INNER_CAP[method] if inner_cap == "default" else inner_cap
    cfg = SubsolverConfig(FRANK_WOLFE if method == "gmm" else PROJECTED_ACCELERATED, factor * eps_abs, cap)
    if method == "gmm":
        return run_gmm(problem, None, L, bundle, r_u, r_d, cfg, stop, audit=audit)
    if method == "igmm":
        return run_igmm(problem, None, L, bundle, r_u, r_d, cfg, stop, audit=audit)
    return run_ogmm(problem, None, L, bundle, newton_iters, cfg, stop, weight_rule=weight_rule, audit=audit)


class FirstOrderMinimizer(BaseEstimator):
    """Estimator front end: ``fit(problem)`` runs the configured method.

    Fitted attributes are ``x_`` (final iterate), ``report_`` (the run
    report) and ``n_iter_`` (outer iterations).
    """

    def __init__(self, method="ogmm", bundle=4, L_scale=1.0, eps_rel=1e-4, newton_iters=2, inner_cap="default",
                 weight_rule="eq89", tol_factor=None, r_u=2.0, r_d=0.5, max_outer=10_000_000):
        self.method = method
        self.bundle = bundle
        self.L_scale = L_scale
        self.eps_rel = eps_rel
        self.newton_iters = newton_iters
        self.inner_cap = inner_cap
        self.weight_rule = weight_rule
        self.tol_factor = tol_factor
        self.r_u = r_u
        self.r_d = r_d
        self.max_outer = max_outer

    def fit(self, problem, y=None):
        rep = run_method(problem, self.method, self.bundle, self.L_scale, self.eps_rel, self.newton_iters,
                         self.inner_cap, self.weight_rule, self.tol_factor, self.r_u, self.r_d,
                         max_outer=self.max_outer)
        self.report_ = rep
        self.x_ = rep.x
        self.n_iter_ = rep.outer
        return self

    def predict(self, problem):
        """Objective value at the fitted point."""
        check_is_fitted(self, "x_")
        return problem.oracle(self.x_)[0]
