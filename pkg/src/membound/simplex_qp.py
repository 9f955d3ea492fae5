"""Approximate solvers for quadratic programs over the standard simplex.

The problem family is::

    min_{lam in simplex}  d(lam) = (A/2) <lam, C lam> - <D, lam>

with ``C`` symmetric positive semidefinite and ``A > 0``.  The only quality
guarantee a caller may rely on is that the returned point is never worse
than the starting point.  Both solvers stop on the Frank-Wolfe gap
``max_i <grad, lam - e_i>``, which upper-bounds the optimality error.
"""
from dataclasses import dataclass

import numpy as np

FRANK_WOLFE = "frank-wolfe"
PROJECTED_ACCELERATED = "projected-accelerated"


@dataclass(frozen=True)
class SimplexQP:
    C: np.ndarray
    D: np.ndarray
    A: float

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.atleast_1d(np.asarray(self.D, dtype=float))
        if C.shape != (D.shape[0], D.shape[0]):
            raise ValueError(f"C has shape {C.shape}, D has length {D.shape[0]}")
        if not self.A > 0:
            raise ValueError("scaling parameter A must be positive")
        if not np.allclose(C, C.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(C).max())):
            raise ValueError("C must be symmetric")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def size(self):
        return self.D.shape[0]

    def gradient(self, lam):
        return self.A * (self.C @ lam) - self.D


@dataclass(frozen=True)
class SubsolverConfig:
    """Subsolver choice, absolute tolerance and per-call iteration cap.

    ``max_inner=None`` removes the cap; termination then relies on the
    tolerance alone.
    """

    method: str = PROJECTED_ACCELERATED
    tol: float = 1e-9
    max_inner: int | None = 10000

    def __post_init__(self):
        if self.method not in (FRANK_WOLFE, PROJECTED_ACCELERATED):
            raise ValueError(f"unknown subsolver method {self.method!r}")
        if not self.tol > 0:
            raise ValueError("subsolver tolerance must be positive")
        if self.max_inner is not None and self.max_inner < 1:
            raise ValueError("max_inner must be >= 1")


def project_simplex(v):
    """Euclidean projection onto the standard simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] == 1:
        return np.ones(1)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    w = np.maximum(v - css[rho] / (rho + 1.0), 0.0)
    return w / w.sum()


def fw_linear_minimizer(gradient):
    """Index of the simplex vertex minimizing ``<gradient, e_i>``; lowest index on ties."""
    return int(np.argmin(np.asarray(gradient, dtype=float)))


def objective(qp, lam):
    lam = np.asarray(lam, dtype=float)
    if lam.shape != qp.D.shape:
        raise ValueError(f"lambda has shape {lam.shape}, problem has size {qp.size}")
    return 0.5 * qp.A * float(lam @ qp.C @ lam) - float(qp.D @ lam)


def fw_gap(qp, lam):
    """Frank-Wolfe duality gap; an upper bound on ``d(lam) - min d``."""
    grad = qp.gradient(lam)
    return float(grad @ lam - grad.min())


def _clean(lam):
    lam = np.maximum(lam, 0.0)
    return lam / lam.sum()


def _frank_wolfe(qp, lam, tol, cap):
    """Frank-Wolfe with away steps and exact line search."""
    C, A = qp.C, qp.A
    Clam = C @ lam
    it = 0
    while cap is None or it < cap:
        grad = A * Clam - qp.D
        gl = grad @ lam
        s = fw_linear_minimizer(grad)
        gap = gl - grad[s]
        if gap <= tol:
            break
        support = np.flatnonzero(lam > 0)
        v = support[np.argmax(grad[support])]
        if gap >= grad[v] - gl or lam[v] >= 1.0:
            # toward e_s
            j, sign, slope, max_step = s, 1.0, gap, 1.0
        else:
            # away from e_v
            j, sign, slope, max_step = v, -1.0, grad[v] - gl, lam[v] / (1.0 - lam[v])
        curv = A * (C[j, j] - 2.0 * Clam[j] + lam @ Clam)
        step = max_step if curv <= 0 else min(max_step, slope / curv)
        # lam + step * sign * (e_j - lam)
        t = sign * step
        lam = (1.0 - t) * lam
        lam[j] += t
        if sign < 0 and step == max_step:
            lam[j] = 0.0
        Clam = (1.0 - t) * Clam + t * C[:, j]
        it += 1
    return _clean(lam), it


def _projected_fgm(qp, lam0, tol, cap):
    lipschitz = qp.A * float(np.trace(qp.C))
    if lipschitz <= 1e-14 * np.abs(qp.D).max() or not np.isfinite(1.0 / lipschitz):
        # negligible quadratic term: the best vertex of the linear part
        lam = np.zeros(qp.size)
        lam[fw_linear_minimizer(-qp.D)] = 1.0
        return lam, 1
    step = 1.0 / lipschitz
    best, best_val = lam0, objective(qp, lam0)
    lam, y, t = lam0, lam0, 1.0
    it = 0
    while cap is None or it < cap:
        it += 1
        lam_next = project_simplex(y - step * qp.gradient(y))
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = lam_next + ((t - 1.0) / t_next) * (lam_next - lam)
        lam, t = lam_next, t_next
        grad = qp.gradient(lam)
        val = 0.5 * float(lam @ (grad - qp.D))
        if val < best_val:
            best, best_val = lam, val
        if grad @ lam - grad.min() <= tol:
            break
    return best, it


def solve(qp, lam0, cfg):
    """Approximately minimize ``qp`` starting from ``lam0``.

    Returns
    -------
    lam : ndarray
        Feasible point with ``objective(qp, lam) <= objective(qp, lam0)``.
    n_iter : int
        Inner iterations spent.
    """
    lam0 = np.asarray(lam0, dtype=float)
    if lam0.shape != qp.D.shape:
        raise ValueError(f"lambda0 has shape {lam0.shape}, problem has size {qp.size}")
    if np.any(lam0 < -1e-12) or abs(lam0.sum() - 1.0) > 1e-10:
        raise ValueError("lambda0 must lie in the simplex")
    lam0 = _clean(lam0)
    if qp.size == 1 or fw_gap(qp, lam0) <= cfg.tol:
        return lam0, 0
    if cfg.method == FRANK_WOLFE:
        lam, it = _frank_wolfe(qp, lam0.copy(), cfg.tol, cfg.max_inner)
    else:
        lam, it = _projected_fgm(qp, lam0, cfg.tol, cfg.max_inner)
    if objective(qp, lam) > objective(qp, lam0):
        lam = lam0
    return lam, it
