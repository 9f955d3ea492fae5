"""The optimal interpolating lower bound of smooth convex functions.

Given first-order records ``(z_i, f_i, g_i)`` and a Lipschitz constant ``L``,
the bound is the smallest ``L``-smooth convex function reproducing every
record.  It has no closed form; it is evaluated through its dual::

    p(y) = max_{lam in simplex} rho(y, lam)
    rho(y, lam) = <lam, G^T y + H + d_g/(2L)> - ||G lam||_*^2 / (2L)

where ``H_i = f_i - <g_i, z_i>`` and ``d_g`` holds the squared dual norms of
the columns of ``G``.  The gradient is ``G lam*``.

Two oracles independent of the dual route are provided for testing: a grid
search over the simplex and, in one dimension, the lower envelope of all
curvature-``L`` parabolae lying above the piecewise-linear model.
"""
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .metric import Metric, Parabola
from .simplex_qp import PROJECTED_ACCELERATED, SimplexQP, SubsolverConfig, fw_gap, solve

DEFAULT_BOUND_SOLVER = SubsolverConfig(PROJECTED_ACCELERATED, tol=1e-9, max_inner=10000)


@dataclass(frozen=True)
class OracleRecord:
    z: np.ndarray
    f: float
    g: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if z.shape != g.shape:
            raise ValueError(f"point and gradient dimensions differ: {z.shape} vs {g.shape}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "f", float(self.f))

    def linear(self, y):
        """Supporting hyperplane ``f + <g, y - z>``."""
        return self.f + float(self.g @ (np.asarray(y, dtype=float) - self.z))


@dataclass(frozen=True)
class BundleModel:
    """Stored memory ``(H, G)`` with derived ``d_g`` and Gram matrix ``Q``.

    ``H_i = f_i - <g_i, z_i>`` is the value of the i-th linearization at the origin.
    ``records`` is kept when the model was built from raw oracle output.
    """

    H: np.ndarray
    G: np.ndarray
    L: float
    metric: Metric
    records: tuple | None = None
    d_g: np.ndarray = field(init=False, repr=False)
    Q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = np.atleast_1d(np.asarray(self.H, dtype=float))
        G = np.asarray(self.G, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        if H.shape[0] == 0:
            raise ValueError("a bundle model needs at least one record")
        if G.shape != (self.metric.n, H.shape[0]):
            raise ValueError(f"G has shape {G.shape}, expected ({self.metric.n}, {H.shape[0]})")
        if not self.L > 0:
            raise ValueError("Lipschitz constant must be positive")
        Q = self.metric.gram(G)
        Q = 0.5 * (Q + Q.T)
        for name, val in (("H", H), ("G", G), ("Q", Q)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        d_g = np.diag(Q).copy()
        d_g.setflags(write=False)
        object.__setattr__(self, "d_g", d_g)

    @classmethod
    def from_records(cls, records, L, metric=None):
        records = tuple(records)
        if not records:
            raise ValueError("a bundle model needs at least one record")
        if metric is None:
            metric = Metric(records[0].z.shape[0])
        G = np.stack([r.g for r in records], axis=1)
        H = np.array([r.f - r.g @ r.z for r in records])
        return cls(H, G, L, metric, records)

    @property
    def size(self):
        return self.H.shape[0]

    @property
    def dim(self):
        return self.metric.n

    def lower_model(self, y):
        """Piecewise-linear model ``max_i l_i(y)``."""
        return float(np.max(self.H + self.G.T @ np.asarray(y, dtype=float)))


class BoundEvaluation(NamedTuple):
    value: float
    lam: np.ndarray
    gradient: np.ndarray
    certified_gap: float
    n_iter: int


def _dual_qp(y, model):
    y = np.asarray(y, dtype=float)
    if y.shape != (model.dim,):
        raise ValueError(f"point has shape {y.shape}, model dimension is {model.dim}")
    D = model.G.T @ y + model.H + model.d_g / (2.0 * model.L)
    return SimplexQP(model.Q, D, 1.0 / model.L)


def rho(y, lam, model):
    """Dual objective; a lower bound on ``p(y)`` for every simplex ``lam``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (model.size,):
        raise ValueError(f"lambda has shape {lam.shape}, model size is {model.size}")
    if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-10:
        raise ValueError("lambda must lie in the simplex")
    qp = _dual_qp(y, model)
    return float(qp.D @ lam) - 0.5 * qp.A * float(lam @ model.Q @ lam)


def eval_p(y, model, subsolver=DEFAULT_BOUND_SOLVER):
    """Evaluate the bound and its gradient at ``y``.

    The returned value is ``rho(y, lam)`` at the multipliers found, so it is a
    valid lower bound on the exact ``p(y)`` however loosely the subproblem was
    solved; ``certified_gap`` bounds the shortfall.
    """
    qp = _dual_qp(y, model)
    lam0 = np.zeros(model.size)
    lam0[int(np.argmax(qp.D - 0.5 * qp.A * model.d_g))] = 1.0
    lam, n_iter = solve(qp, lam0, subsolver)
    value = float(qp.D @ lam) - 0.5 * qp.A * float(lam @ model.Q @ lam)
    return BoundEvaluation(value, lam, model.G @ lam, fw_gap(qp, lam), n_iter)


def simplex_grid(m, resolution):
    """All points of the ``m``-simplex whose coordinates are multiples of ``1/k``."""
    k = int(round(1.0 / resolution))
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        a = np.arange(k + 1) / k
        return np.column_stack([a, 1.0 - a])
    i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    keep = i + j <= k
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, k - i - j]) / k


def simplex_brute_force_p(y, model, resolution=1e-3):
    """Grid maximum of ``rho(y, .)`` over the simplex, with an error bound.

    Returns ``(value, error_bound)`` where ``value <= p(y) <= value + error_bound``.
    """
    if model.size > 3:
        raise ValueError("grid search is limited to models with at most 3 records")
    if not 0 < resolution <= 0.1:
        raise ValueError("resolution must lie in (0, 0.1]")
    qp = _dual_qp(y, model)
    grid = simplex_grid(model.size, resolution)
    vals = grid @ qp.D - 0.5 * qp.A * np.einsum("ij,jk,ik->i", grid, model.Q, grid)
    # any simplex point is within l1 distance (m - 1) * h of a grid point
    h = 1.0 / round(1.0 / resolution)
    slope = np.abs(qp.D).max() + qp.A * np.abs(model.Q).max()
    return float(vals.max()), float(slope * (model.size - 1) * h)


def envelope_p_oracle_1d(y, model, vertex_grid=None, refine=True):
    """Lower envelope of curvature-``L`` parabolae dominating the linear model.

    For a vertex ``v`` the lowest admissible height is
    ``w(v) = max_i (l_i(v) + ||g_i||_*^2/(2L))``; the envelope at ``y`` is the
    minimum of ``w(v) + (L/2)||y - v||^2`` over the vertex grid
    ``(lo, hi, step)``, polished by a bounded scalar search around the best
    grid vertex unless ``refine`` is false.  Without refinement the grid
    biases the result upwards.  Accepts a scalar or an array of points.
    """
    if model.dim != 1:
        raise ValueError("the envelope oracle is one-dimensional")
    b = 1.0 if model.metric.diag is None else float(model.metric.diag[0])
    L = model.L
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    g = model.G[0]
    if vertex_grid is None:
        # the optimal vertex is y - p'(y)/(L b) and p'(y) lies in [min g, max g]
        reach = np.array([g.min(), g.max()]) / (L * b)
        pts = np.concatenate([y_arr, y_arr.min() - reach, y_arr.max() - reach])
        if model.records is not None:
            z = np.array([r.z[0] for r in model.records])
            pts = np.concatenate([pts, z, z - g / (L * b)])
        vertex_grid = (pts.min() - 1.0, pts.max() + 1.0, 1e-3)
    lo, hi, step = vertex_grid
    v = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
    w = np.max(model.H[:, None] + np.outer(g, v) + (g**2 / (2.0 * L * b))[:, None], axis=0)
    lift = g**2 / (2.0 * L * b)
    out = np.empty_like(y_arr)
    for k, yk in enumerate(y_arr):
        vals = w + 0.5 * L * b * (yk - v) ** 2
        j = int(np.argmin(vals))
        out[k] = vals[j]
        if refine and v.size > 1:
            # the objective is convex in v, so its minimum lies within one cell of the grid minimum
            res = minimize_scalar(lambda t: np.max(model.H + g * t + lift) + 0.5 * L * b * (yk - t) ** 2,
                                  bounds=(v[max(j - 1, 0)], v[min(j + 1, v.size - 1)]), method="bounded",
                                  options={"xatol": 1e-12})
            out[k] = min(out[k], float(res.fun))
    return float(out[0]) if np.ndim(y) == 0 else out


def upper_parabolae(model):
    """Parabolae ``Psi_i`` of the bound at each stored record (needs records)."""
    if model.records is None:
        raise ValueError("model was not built from records")
    out = []
    for r in model.records:
        dual = model.metric.dual_norm_sq(r.g)
        out.append(Parabola(model.L, r.z - model.metric.solve(r.g) / model.L, r.f - dual / (2.0 * model.L)))
    return out


def aggregate(model, T):
    """Reduced model with ``H~ = T^T H`` and ``G~ = G T``.

    Every column of ``T`` must lie in the simplex.  The reduced bound never
    exceeds the original one.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim == 1:
        T = T[:, None]
    if T.shape[0] != model.size:
        raise ValueError(f"T has {T.shape[0]} rows, model has {model.size} records")
    if np.any(T < -1e-12) or np.any(np.abs(T.sum(axis=0) - 1.0) > 1e-12):
        raise ValueError("every column of T must lie in the simplex")
    return BundleModel(T.T @ model.H, model.G @ T, model.L, model.metric)


class InterpolabilityResult(NamedTuple):
    ok: bool
    worst_pair: tuple | None
    worst_slack: float
    min_lipschitz: float

    def __bool__(self):
        return self.ok


def interpolability_check(records, L, metric=None, tol=1e-10):
    """Check ``f_j >= l_i(z_j) + ||g_j - g_i||_*^2/(2L)`` for every ordered pair.

    ``worst_pair`` holds the 0-based ``(i, j)`` with the smallest slack and
    ``min_lipschitz`` the smallest ``L`` for which all conditions hold
    (``inf`` when the records are not convex-consistent).
    """
    records = list(records)
    if not L > 0:
        raise ValueError("Lipschitz constant must be positive")
    if metric is None:
        metric = Metric(records[0].z.shape[0])
    worst, worst_pair, min_L = np.inf, None, 0.0
    for i, j in itertools.permutations(range(len(records)), 2):
        ri, rj = records[i], records[j]
        excess = rj.f - ri.linear(rj.z)
        dg = metric.dual_norm_sq(rj.g - ri.g)
        slack = excess - dg / (2.0 * L)
        if slack < worst:
            worst, worst_pair = slack, (i, j)
        if dg > 0:
            min_L = max(min_L, dg / (2.0 * excess) if excess > 0 else np.inf)
        elif excess < -tol:
            min_L = np.inf
    if worst_pair is None:
        worst = 0.0
    return InterpolabilityResult(bool(worst >= -tol), worst_pair, float(worst), float(min_L))


def tilt(model, c, d):
    """Bound model of ``f + <c, .> + d`` built from the same points.

    Tilting leaves ``f_i - <g_i, z_i>`` shifted by ``d`` only, so the records
    are needed only to carry them along.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (model.dim,):
        raise ValueError(f"tilt vector has shape {c.shape}, model dimension is {model.dim}")
    records = None
    if model.records is not None:
        records = tuple(OracleRecord(r.z, r.f + c @ r.z + d, r.g + c) for r in model.records)
    return BundleModel(model.H + d, model.G + c[:, None], model.L, model.metric, records)


def read_records_csv(path):
    """Read records from CSV with header ``z_0..z_{n-1},f,g_0..g_{n-1}``."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if "f" not in header:
            raise ValueError("record file header must contain an 'f' column")
        zi = [k for k, h in enumerate(header) if h.startswith("z_")]
        gi = [k for k, h in enumerate(header) if h.startswith("g_")]
        if len(zi) != len(gi) or not zi:
            raise ValueError("record file needs matching z_* and g_* columns")
        fi = header.index("f")
        out = []
        for row in reader:
            if not row or not "".join(row).strip():
                continue
            vals = [float(v) for v in row]
            out.append(OracleRecord([vals[k] for k in zi], vals[fi], [vals[k] for k in gi]))
    return out


def write_records_csv(path, records):
    import csv

    n = records[0].z.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"z_{k}" for k in range(n)] + ["f"] + [f"g_{k}" for k in range(n)])
        for r in records:
            w.writerow([repr(float(v)) for v in r.z] + [repr(r.f)] + [repr(float(v)) for v in r.g])


class OptimalLowerBound(BaseEstimator):
    """Estimator wrapper: fit on oracle records, predict the bound.

    Parameters
    ----------
    L : float
        Lipschitz constant of the gradient.
    tol : float
        Absolute tolerance of the dual subproblem.
    max_inner : int
        Iteration cap of the dual subproblem.
    metric_diag : array-like or None
        Diagonal of the metric operator; ``None`` is Euclidean.

    Examples
    --------
    >>> import numpy as np
    >>> est = OptimalLowerBound(L=1.0).fit(
    ...     np.array([[-1.0], [0.0], [1.0]]), np.array([0.5, 0.5, 1.5]),
    ...     gradients=np.array([[-0.5], [0.5], [1.5]]))
    >>> round(float(est.predict([[0.0]])[0]), 6)
    0.5
    """

    def __init__(self, L=1.0, tol=1e-9, max_inner=10000, metric_diag=None):
        self.L = L
        self.tol = tol
        self.max_inner = max_inner
        self.metric_diag = metric_diag

    def fit(self, X, y, gradients):
        X = check_array(X)
        y = np.asarray(y, dtype=float).ravel()
        gradients = check_array(gradients)
        if gradients.shape != X.shape or y.shape[0] != X.shape[0]:
            raise ValueError("X, y and gradients must describe the same records")
        n = X.shape[1]
        metric = Metric(n) if self.metric_diag is None else Metric.diagonal(self.metric_diag)
        records = [OracleRecord(z, fz, g) for z, fz, g in zip(X, y, gradients)]
        self.model_ = BundleModel.from_records(records, self.L, metric)
        self.subsolver_ = SubsolverConfig(PROJECTED_ACCELERATED, self.tol, self.max_inner)
        self.n_features_in_ = n
        return self

    def evaluate(self, y):
        check_is_fitted(self, "model_")
        return eval_p(np.asarray(y, dtype=float), self.model_, self.subsolver_)

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return np.array([self.evaluate(x).value for x in X])

    def gradient(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return np.array([self.evaluate(x).gradient for x in X])

    def lower_model(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return np.array([self.model_.lower_model(x) for x in X])
