"""Gradient methods with memory: GMM, IGMM and OGMM.

All three keep a bounded bundle ``(H, G)`` of past oracle records, updated
with a cyclic replacement strategy around a few reserved slots, and solve a
small quadratic program over the simplex for the bundle multipliers.
"""
import numpy as np

from ..simplex_qp import FRANK_WOLFE, PROJECTED_ACCELERATED, SimplexQP, SubsolverConfig, solve
from .basic import WEIGHT_RULES, _start
from .core import (ABORTED, CONVERGED, MAX_OUTER, PRIMAL, SolverAbort, SolverState, esp_slack,
                   potential, update_dual_aggregate)


class Bundle:
    """Fixed-capacity memory with ``n_reserved`` leading slots and a cyclic pool.

    Active records always occupy the leading ``size`` slots.  ``Q`` is the
    dual Gram matrix of the active columns.
    """

    def __init__(self, capacity, n_reserved, metric):
        if capacity < 1:
            raise ValueError("bundle capacity must be >= 1")
        if n_reserved > capacity:
            raise ValueError(f"{n_reserved} reserved slots exceed capacity {capacity}")
        self.capacity = capacity
        self.n_reserved = n_reserved
        self.metric = metric
        self.H = np.zeros(capacity)
        self.G = np.zeros((metric.n, capacity))
        self.Q = np.zeros((capacity, capacity))
        self.reserved_filled = 0
        self.pool_filled = 0
        self.pool_next = 0

    @property
    def size(self):
        return self.reserved_filled + self.pool_filled

    @property
    def pool_capacity(self):
        return self.capacity - self.n_reserved

    def active(self):
        m = self.size
        return self.H[:m], self.G[:, :m], self.Q[:m, :m]


def crs_insert(bundle, reserved_records, new_record=None):
    """Overwrite the reserved slots and push ``new_record`` into the cyclic pool.

    Records are ``(h, g)`` pairs.  Once the pool is full the oldest pool
    record is displaced.  Only the Gram rows and columns of changed slots
    are recomputed.
    """
    if len(reserved_records) > bundle.n_reserved:
        raise ValueError(f"{len(reserved_records)} reserved records exceed {bundle.n_reserved} reserved slots")
    changed = []
    for i, (h, g) in enumerate(reserved_records):
        bundle.H[i], bundle.G[:, i] = h, g
        changed.append(i)
    bundle.reserved_filled = max(bundle.reserved_filled, len(reserved_records))
    if new_record is not None and bundle.pool_capacity > 0:
        j = bundle.n_reserved + bundle.pool_next
        bundle.H[j], bundle.G[:, j] = new_record
        bundle.pool_next = (bundle.pool_next + 1) % bundle.pool_capacity
        bundle.pool_filled = min(bundle.pool_filled + 1, bundle.pool_capacity)
        changed.append(j)
    if bundle.reserved_filled < bundle.n_reserved and bundle.pool_filled:
        raise ValueError("reserved slots must be filled before the pool")
    m = bundle.size
    changed = [j for j in changed if j < m]
    cols = bundle.G[:, :m].T @ bundle.metric.solve(bundle.G[:, changed])
    bundle.Q[:m, changed] = cols
    bundle.Q[changed, :m] = cols.T
    return bundle


def omega_star(S, Q, lam, A, tau, form="proximal"):
    """``<S, lam> - ((A + tau)/2) <lam, Q lam>``; ``form="listing"`` drops ``tau``."""
    c = A + tau if form == "proximal" else A
    return float(S @ lam) - 0.5 * c * float(lam @ Q @ lam)


def newton_adjust(tau, Q, S, e, lam0, A0, newton_iters, cfg, form="proximal"):
    """Raise the convergence guarantee by Newton steps on ``omega*(A) - e``.

    Every iteration re-solves the multiplier problem from ``lam0``.  The last
    state whose ``omega*`` is at least ``e`` (up to roundoff) is returned, so
    ``A_valid >= A0``.

    Returns
    -------
    lam_valid, A_valid, inner
    """
    if not A0 > 0:
        raise ValueError("A0 must be positive")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    S = np.atleast_1d(np.asarray(S, dtype=float))
    lam0 = np.asarray(lam0, dtype=float)
    lam_valid, A_valid, A, inner = lam0, A0, A0, 0
    for _ in range(newton_iters):
        lam, it = solve(SimplexQP(Q, S, A + tau), lam0, cfg)
        inner += it
        qq = float(lam @ Q @ lam)
        w = omega_star(S, Q, lam, A, tau, form)
        if w < e - 1e-14 * max(1.0, abs(e)):
            break
        lam_valid, A_valid = lam, A
        if qq <= 0:
            break
        A = A + 2.0 * (w - e) / qq
    return lam_valid, A_valid, inner


def _step_slack(problem, x_bar, x_new, f_new, a, rng, x_star):
    """Smallest slack of ``|x_+ - y|^2/2 <= |x_bar - y|^2/2 + a (f(y) - f(x_+))`` over probes."""
    metric = problem.metric
    probes = [x_bar, x_bar + rng.standard_normal(x_bar.shape[0]) * (1.0 + np.abs(x_bar))]
    if x_star is not None:
        probes.append(x_star)
    worst = np.inf
    for y in probes:
        fy = problem.oracle(y)[0]
        s = 0.5 * metric.norm_sq(x_bar - y) + a * (fy - f_new) - 0.5 * metric.norm_sq(x_new - y)
        worst = min(worst, s)
    return float(worst)


def _run_line_search_memory(problem, x0, L, bundle_size, r_u, r_d, cfg, stop, kind, audit, x_star):
    if bundle_size < 1:
        raise ValueError("bundle_size must be >= 1")
    if not (r_u > 1 and 0 < r_d <= 1):
        raise ValueError("line-search factors need r_u > 1 >= r_d > 0")
    tau, x, oracle, log = _start(problem, x0, L)
    metric = problem.metric
    quad_term = tau if kind == "igmm" else 0.0
    bundle = Bundle(bundle_size, 1, metric)
    audit = set(audit)
    rng = np.random.default_rng(0)
    if x_star is None:
        x_star = problem.x_star
    a_prev, A_sum, trials, prev = tau, 0.0, 0, None
    termination, message = MAX_OUTER, ""
    try:
        fx, gx = oracle(x)
        if fx < stop.threshold:
            termination = CONVERGED
        while termination != CONVERGED and len(log.records) < stop.max_outer:
            newest = (fx - float(gx @ x), gx)
            crs_insert(bundle, [newest], prev)
            prev = newest
            H, G, Q = bundle.active()
            R = H + G.T @ x
            if quad_term:
                R = R + 0.5 * quad_term * np.diag(Q)
            lam0 = np.zeros(bundle.size)
            lam0[0] = 1.0
            a = a_prev / r_d
            inner = 0
            while True:
                trials += 1
                if a < tau:
                    a = tau
                    x_new = x - tau * metric.solve(gx)
                    f_new, g_new = oracle(x_new)
                    break
                qp = SimplexQP(Q, R, a + quad_term)
                lam, it = solve(qp, lam0, cfg)
                inner += it
                x_new = x - a * metric.solve(G @ lam)
                f_new, g_new = oracle(x_new)
                if f_new <= float(R @ lam) - 0.5 * qp.A * float(lam @ Q @ lam):
                    break
                a = a / r_u
            extra = {"f_x": f_new}
            if "step" in audit:
                extra["step_slack"] = _step_slack(problem, x, x_new, f_new, a, rng, x_star)
            x, fx, gx = x_new, f_new, g_new
            a_prev = a
            A_sum += a
            log.add(len(log.records) + 1, fx, inner, A_sum, **extra)
            if fx < stop.threshold:
                termination = CONVERGED
    except SolverAbort as exc:
        termination, message = ABORTED, str(exc)
    return log.report(kind, bundle_size, L / problem.L_f, termination, x, oracle, trials, message,
                      reconstruction=kind == "gmm")


def run_igmm(problem, x0, L, bundle_size, r_u, r_d, cfg, stop, audit=(), x_star=None):
    """Improved gradient method with memory.

    Each step minimizes the parabolic majorant built from the bundle's
    optimal lower bound; a backtracking search on the step ``a`` keeps it
    valid and falls back to a plain gradient step once ``a < 1/L``.
    """
    if cfg is None:
        cfg = SubsolverConfig(PROJECTED_ACCELERATED, 1e-9, 20)
    return _run_line_search_memory(problem, x0, L, bundle_size, r_u, r_d, cfg, stop.with_mode(PRIMAL),
                                   "igmm", audit, x_star)


def run_gmm(problem, x0, L, bundle_size, r_u, r_d, cfg, stop, audit=(), x_star=None):
    """Gradient method with a piecewise-linear memory model (reconstruction).

    Same loop as ``run_igmm`` with the quadratic correction terms dropped, so
    the model reduces to the maximum of the stored hyperplanes.
    """
    if cfg is None:
        cfg = SubsolverConfig(FRANK_WOLFE, 1e-9, None)
    return _run_line_search_memory(problem, x0, L, bundle_size, r_u, r_d, cfg, stop.with_mode(PRIMAL),
                                   "gmm", audit, x_star)


def run_ogmm(problem, x0, L, bundle_size, newton_iters, cfg, stop, weight_rule="eq89", omega_form="proximal",
             audit=(), x_star=None):
    """Optimized gradient method with memory.

    One combined oracle call per iteration.  Slot 1 of the bundle holds the
    aggregate ``(h_k, g_k)``, slot 2 the newest record and the rest past
    newest records.  ``bundle_size=1`` keeps only the aggregate of those two,
    with weights ``(A_k, a_{k+1})``, and still applies the Newton adjustment.
    """
    if bundle_size < 1:
        raise ValueError("bundle_size must be >= 1")
    if newton_iters < 0:
        raise ValueError("newton_iters must be >= 0")
    if weight_rule not in ("listing", "eq89"):
        raise ValueError(f"unknown weight rule {weight_rule!r}")
    if cfg is None:
        cfg = SubsolverConfig(PROJECTED_ACCELERATED, 1e-9, 10)
    tau, x0, oracle, log = _start(problem, x0, L)
    metric = problem.metric
    weight = WEIGHT_RULES[weight_rule]
    state = SolverState(x0, tau, lam=np.ones(1))
    bundle = Bundle(bundle_size, 2, metric) if bundle_size >= 2 else None
    state.bundle = bundle
    audit = set(audit)
    if x_star is None:
        x_star = problem.x_star
    prev = None
    termination, message = MAX_OUTER, ""
    try:
        while len(log.records) < stop.max_outer:
            A = state.A
            a = weight(A, L)
            y = (A * state.x + a * state.v) / (A + a)
            fy, gy = oracle(y)
            step = metric.solve(gy)
            gg = float(gy @ step)
            state.x = y - tau * step
            hb = fy - float(gy @ y) + 0.5 * tau * gg
            e = fy - 0.5 * tau * gg
            inner = 0
            if A == 0:
                state.h, state.g_agg, state.A = hb, gy.copy(), a
            elif bundle is None:
                h = (A * state.h + a * hb) / (A + a)
                g = (A * state.g_agg + a * gy) / (A + a)
                S = np.array([h + float(g @ x0)])
                Q = np.array([[metric.dual_norm_sq(g)]])
                _, A_new, inner = newton_adjust(tau, Q, S, e, np.ones(1), A + a, newton_iters, cfg, omega_form)
                state.h, state.g_agg, state.A = h, g, A_new
            else:
                crs_insert(bundle, [(state.h, state.g_agg), (hb, gy)], prev)
                H, G, Q = bundle.active()
                S = H + G.T @ x0
                lam0 = np.zeros(bundle.size)
                lam0[0], lam0[1] = A / (A + a), a / (A + a)
                lam, A_new, inner = newton_adjust(tau, Q, S, e, lam0, A + a, newton_iters, cfg, omega_form)
                state.h, state.g_agg, state.A, state.lam = float(H @ lam), G @ lam, A_new, lam
            prev = (hb, gy)
            update_dual_aggregate(state, A, state.A - A, gy)
            state.v = x0 - state.A * metric.solve(state.g_agg)
            state.a, state.y, state.f_y, state.g_y = a, y, fy, gy
            state.k += 1
            extra = {}
            if "rate" in audit:
                extra["f_x"] = float(problem.oracle(state.x)[0])
            if "esp" in audit:
                extra["esp_slack"] = esp_slack(state, metric)
            if "potential" in audit and x_star is not None:
                extra["potential"] = potential(state, metric, problem.f_star, x_star)
            log.add(state.k, e, inner, state.A, **extra)
            if e < stop.threshold:
                termination = CONVERGED
                break
    except SolverAbort as exc:
        termination, message = ABORTED, str(exc)
    rep = log.report("ogmm", bundle_size, L / problem.L_f, termination, state.x, oracle, message=message)
    rep.state = state
    return rep


def offline_final_step(state, L, variant="fgm"):
    """Extra point ``y_bar = (A_k x_k + a_bar v_k)/(A_k + a_bar)`` and its guarantee.

    ``variant="sqrt"`` uses ``L a_bar^2 = A_k``; ``"fgm"`` uses the fast
    gradient weight ``L a_bar^2 = A_k + a_bar``.
    """
    if not state.A > 0:
        raise ValueError("offline step needs a state with A_k > 0")
    if variant == "sqrt":
        a_bar = np.sqrt(state.A / L)
    elif variant == "fgm":
        a_bar = (1.0 + np.sqrt(1.0 + 4.0 * L * state.A)) / (2.0 * L)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    A_bar = state.A + a_bar
    return (state.A * state.x + a_bar * state.v) / A_bar, float(A_bar)
