"""Run bookkeeping shared by every method: state, stopping, logs, oracle counting."""
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

PRIMAL = "primal"
COMPOSITE = "composite"

CONVERGED = "converged"
MAX_OUTER = "max_outer"
ABORTED = "aborted"


class SolverAbort(RuntimeError):
    """Raised when the oracle returns non-finite output."""


@dataclass(frozen=True)
class StoppingRule:
    """Stop when the monitored value drops below ``threshold``.

    ``mode="primal"`` monitors ``f(x_k)``; ``mode="composite"`` monitors
    ``f(y_k) - (tau/2)||grad f(y_k)||_*^2`` and never queries ``x_k``.
    """

    threshold: float
    mode: str = PRIMAL
    max_outer: int = 10_000_000

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("stopping threshold must be finite")
        if self.mode not in (PRIMAL, COMPOSITE):
            raise ValueError(f"unknown stopping mode {self.mode!r}")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")

    @classmethod
    def relative(cls, problem, eps_rel, mode=PRIMAL, max_outer=10_000_000):
        return cls(problem.threshold(eps_rel), mode, max_outer)

    def with_mode(self, mode):
        return StoppingRule(self.threshold, mode, self.max_outer)


class IterationRecord(NamedTuple):
    k: int
    value: float
    inner: int
    A: float
    time: float
    f_x: float | None = None
    esp_slack: float | None = None
    potential: float | None = None
    step_slack: float | None = None


@dataclass
class RunReport:
    method: str
    bundle: int
    L_scale: float
    outer: int
    inner_avg: float
    time_s: float
    it_ms: float
    termination: str
    log: list = field(repr=False, default_factory=list)
    x: np.ndarray | None = field(repr=False, default=None)
    oracle_calls: int = 0
    trials: int = 0
    message: str = ""
    reconstruction: bool = False
    state: object = field(repr=False, default=None)

    @property
    def inner_total(self):
        return sum(r.inner for r in self.log)


@dataclass
class SolverState:
    """Mutable state of a run.

    ``h`` and ``g_agg`` are the aggregated model ``<lam, H>`` and ``G lam``;
    ``s`` is the dual aggregate kept for audits only.
    """

    x0: np.ndarray
    tau: float
    k: int = 0
    A: float = 0.0
    a: float = 0.0
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    v: np.ndarray | None = None
    s: np.ndarray | None = None
    lam: np.ndarray | None = None
    h: float = 0.0
    g_agg: np.ndarray | None = None
    bundle: object = None
    f_y: float = np.nan
    g_y: np.ndarray | None = None

    def __post_init__(self):
        if self.x is None:
            self.x = self.x0.copy()
        if self.v is None:
            self.v = self.x0.copy()
        if self.s is None:
            self.s = np.zeros_like(self.x0)


class CountingOracle:
    """Wraps a combined oracle, counting calls and rejecting non-finite output."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        fx, gx = self.oracle(x)
        if not np.isfinite(fx) or not np.all(np.isfinite(gx)):
            raise SolverAbort(f"non-finite oracle output at call {self.calls}")
        return float(fx), gx


class RunLog:
    def __init__(self):
        self.records = []
        self.start = time.perf_counter()

    def add(self, k, value, inner, A, **audit):
        self.records.append(IterationRecord(k, value, inner, A, time.perf_counter() - self.start, **audit))

    def report(self, method, bundle, L_scale, termination, x, oracle, trials=0, message="", reconstruction=False):
        outer = len(self.records)
        elapsed = time.perf_counter() - self.start
        inner = sum(r.inner for r in self.records)
        return RunReport(method, bundle, L_scale, outer, inner / outer if outer else 0.0, elapsed,
                         1e3 * elapsed / outer if outer else 0.0, termination, self.records, x,
                         oracle.calls, trials, message, reconstruction)


def check_L(L):
    if not L > 0:
        raise ValueError("L must be positive")
    return 1.0 / L


def esp_slack(state, metric):
    """``A_k (omega_k* - e_k)`` for the aggregated estimate function.

    ``omega_k* = h_k + <g_k, x0> - ((A_k + tau)/2) ||g_k||_*^2`` and
    ``e_k = f(y_k) - (tau/2)||grad f(y_k)||_*^2``.
    """
    tau, A = state.tau, state.A
    omega = state.h + float(state.g_agg @ state.x0) - 0.5 * (A + tau) * metric.dual_norm_sq(state.g_agg)
    e = state.f_y - 0.5 * tau * metric.dual_norm_sq(state.g_y)
    return A * (omega - e)


def potential(state, metric, f_star, x_star):
    """Gap term ``A_k (f(y_k) - (tau/2)||grad f(y_k)||_*^2 - f*) + ||v_k - x*||^2/2``."""
    e = state.f_y - 0.5 * state.tau * metric.dual_norm_sq(state.g_y)
    return state.A * (e - f_star) + 0.5 * metric.norm_sq(state.v - x_star)


@dataclass(frozen=True)
class EspAudit:
    slack: float
    potential: float | None
    s: np.ndarray


def esp_audit(state, metric, f_star=None, x_star=None):
    """Audit the stricter estimate-sequence property at the current state.

    Returns the slack (nonnegative whenever the property holds), the gap
    term when ``x_star`` is given, and the dual aggregate ``s_k``.
    """
    pot = None
    if x_star is not None:
        pot = potential(state, metric, 0.0 if f_star is None else f_star, x_star)
    return EspAudit(esp_slack(state, metric), pot, state.s.copy())


def update_dual_aggregate(state, A_prev, a, g):
    """``s_{k+1} = (A_k s_k + a_{k+1} g_{k+1}) / A_{k+1}``."""
    state.s = (A_prev * state.s + a * g) / (A_prev + a)
