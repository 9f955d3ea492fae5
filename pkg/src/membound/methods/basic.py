"""Memoryless methods: gradient method, fast gradient method, online OGM."""
import numpy as np

from .core import (ABORTED, COMPOSITE, CONVERGED, MAX_OUTER, PRIMAL, CountingOracle, RunLog, SolverAbort,
                   SolverState, check_L, esp_slack, potential, update_dual_aggregate)


def weight_fgm(A, L):
    """``L a^2 = A + a``."""
    return (1.0 + np.sqrt(1.0 + 4.0 * L * A)) / (2.0 * L)


def weight_ogm(A, L):
    """``L a^2 = 2A + 2a``."""
    return (1.0 + np.sqrt(1.0 + 2.0 * L * A)) / L


def weight_eq89(A, L):
    """``L a^2 = 2A + a``."""
    return (1.0 + np.sqrt(1.0 + 8.0 * L * A)) / (2.0 * L)


WEIGHT_RULES = {"fgm": weight_fgm, "ogm": weight_ogm, "listing": weight_fgm, "eq89": weight_eq89}


def _start(problem, x0, L):
    tau = check_L(L)
    x0 = np.array(problem.x0 if x0 is None else x0, dtype=float)
    if x0.shape != (problem.n,):
        raise ValueError(f"x0 has shape {x0.shape}, problem dimension is {problem.n}")
    return tau, x0, CountingOracle(problem.oracle), RunLog()


def run_gm(problem, x0, L, stop):
    """Gradient descent with the fixed step ``1/L``."""
    tau, x0, oracle, log = _start(problem, x0, L)
    metric = problem.metric
    x = x0
    termination, message = MAX_OUTER, ""
    try:
        fx, gx = oracle(x)
        if fx < stop.threshold:
            termination = CONVERGED
        while termination != CONVERGED and len(log.records) < stop.max_outer:
            x = x - tau * metric.solve(gx)
            fx, gx = oracle(x)
            log.add(len(log.records) + 1, fx, 0, tau * (len(log.records) + 1), f_x=fx)
            if fx < stop.threshold:
                termination = CONVERGED
    except SolverAbort as exc:
        termination, message = ABORTED, str(exc)
    return log.report("gm", 1, L / problem.L_f, termination, x, oracle, message=message)


def run_accelerated(problem, x0, L, stop, weight="fgm", method=None, audit=(), x_star=None):
    """Estimate-sequence method with weights ``weight`` (see ``WEIGHT_RULES``).

    ``y_{k+1} = (A_k x_k + a v_k)/A_{k+1}``, ``x_{k+1} = y_{k+1} - tau B^{-1} g``
    and ``v_{k+1} = v_k - a B^{-1} g``.
    """
    tau, x0, oracle, log = _start(problem, x0, L)
    metric = problem.metric
    rule = WEIGHT_RULES[weight]
    state = SolverState(x0, tau)
    audit = set(audit)
    if x_star is None:
        x_star = problem.x_star
    termination, message = MAX_OUTER, ""
    try:
        while len(log.records) < stop.max_outer:
            A = state.A
            a = rule(A, L)
            y = (A * state.x + a * state.v) / (A + a)
            fy, gy = oracle(y)
            step = metric.solve(gy)
            gg = float(gy @ step)
            hb = fy - float(gy @ y) + 0.5 * tau * gg
            state.x = y - tau * step
            state.v = state.v - a * step
            state.h = (A * state.h + a * hb) / (A + a)
            state.g_agg = gy.copy() if A == 0 else (A * state.g_agg + a * gy) / (A + a)
            update_dual_aggregate(state, A, a, gy)
            state.A, state.a, state.y, state.f_y, state.g_y = A + a, a, y, fy, gy
            state.k += 1
            extra = {}
            if stop.mode == PRIMAL:
                value = oracle(state.x)[0]
                extra["f_x"] = value
            else:
                value = fy - 0.5 * tau * gg
                if "rate" in audit:
                    extra["f_x"] = float(problem.oracle(state.x)[0])
            if "esp" in audit:
                extra["esp_slack"] = esp_slack(state, metric)
            if "potential" in audit and x_star is not None:
                extra["potential"] = potential(state, metric, problem.f_star, x_star)
            log.add(state.k, value, 0, state.A, **extra)
            if value < stop.threshold:
                termination = CONVERGED
                break
    except SolverAbort as exc:
        termination, message = ABORTED, str(exc)
    rep = log.report(method or weight, 1, L / problem.L_f, termination, state.x, oracle, message=message)
    rep.state = state
    return rep


def run_fgm(problem, x0, L, stop, audit=(), x_star=None):
    """Fast gradient method; stops on ``f(x_k)``."""
    return run_accelerated(problem, x0, L, stop.with_mode(PRIMAL), "fgm", "fgm", audit, x_star)


def run_ogm_online(problem, x0, L, stop, audit=(), x_star=None):
    """Online optimized gradient method; stops on the composite value at ``y_k``."""
    return run_accelerated(problem, x0, L, stop.with_mode(COMPOSITE), "ogm", "ogm", audit, x_star)
