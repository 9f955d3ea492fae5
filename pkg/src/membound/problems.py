"""Benchmark problems with combined first-order oracles.

``QUAD`` is an ill-conditioned quadratic ``f(x) = <x, A x>/2`` with
``A = diag(sin^2(pi i / (2n)))`` stored densely.  ``LRSP`` is logistic
regression on a sparse Gaussian design matrix.  Every oracle returns the
value and the gradient in one call, sharing the matrix products.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import expit

from .metric import Metric

log = logging.getLogger(__name__)

# independent Philox streams of an LRSP instance, in spawn order
LRSP_STREAMS = ("pattern", "values", "x0", "labels")


class QuadOracle:
    def __init__(self, matrix):
        self.matrix = np.ascontiguousarray(matrix, dtype=float)
        self.matvecs = 0

    def __call__(self, x):
        # divergent runs overflow here; callers check finiteness
        with np.errstate(over="ignore", invalid="ignore"):
            ax = self.matrix @ x
            self.matvecs += 1
            return 0.5 * float(x @ ax), ax

    def value(self, x):
        return self(x)[0]

    def gradient(self, x):
        ax = self.matrix @ x
        self.matvecs += 1
        return ax


class LogisticOracle:
    """``f(x) = sum softplus(Ax) - <y, Ax>`` with ``grad = A^T (sigmoid(Ax) - y)``."""

    def __init__(self, A, labels):
        self.A = sparse.csr_matrix(A)
        self.AT = self.A.T.tocsr()
        self.labels = np.asarray(labels, dtype=float)
        self.matvecs = 0

    def __call__(self, x):
        t = self.A @ x
        self.matvecs += 2
        value = float(np.logaddexp(0.0, t).sum() - self.labels @ t)
        return value, self.AT @ (expit(t) - self.labels)

    def value(self, x):
        t = self.A @ x
        self.matvecs += 1
        return float(np.logaddexp(0.0, t).sum() - self.labels @ t)

    def gradient(self, x):
        self.matvecs += 2
        return self.AT @ (expit(self.A @ x) - self.labels)


@dataclass
class Problem:
    """A smooth convex test problem.

    ``oracle(x)`` returns ``(f(x), grad f(x))``.  ``f_star`` is exact for
    QUAD and an estimate for LRSP.
    """

    name: str
    n: int
    oracle: object
    L_f: float
    x0: np.ndarray
    f_star: float
    x_star: np.ndarray | None = None
    metric: Metric | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric is None:
            self.metric = Metric(self.n)

    @property
    def f0(self):
        return self.oracle(self.x0)[0]

    def threshold(self, eps_rel):
        """Stopping threshold ``f* + eps_rel (f(x0) - f*)``."""
        if not eps_rel > 0:
            raise ValueError("eps_rel must be positive")
        return self.f_star + eps_rel * (self.f0 - self.f_star)


def quad_spectrum(n):
    return np.sin(np.pi * np.arange(1, n + 1) / (2 * n)) ** 2


def make_quad(n=1000, x0_rule="sqrt"):
    """Diagonal quadratic with spectrum ``sin^2(pi i / (2n))``.

    ``x0_rule="sqrt"`` starts from ``1/sqrt(sigma_i)`` so that every
    eigen-direction contributes ``1/2`` to ``f(x0)``; ``"inverse"`` starts from
    ``1/sigma_i``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sigma = quad_spectrum(n)
    if x0_rule == "sqrt":
        x0 = 1.0 / np.sqrt(sigma)
    elif x0_rule == "inverse":
        x0 = 1.0 / sigma
    else:
        raise ValueError(f"unknown x0 rule {x0_rule!r}")
    oracle = QuadOracle(np.diag(sigma))
    prob = Problem("quad", n, oracle, float(sigma.max()), x0, 0.0, np.zeros(n),
                   meta={"n": n, "x0_rule": x0_rule})
    log.info("quad n=%d f(x0)=%.6g", n, prob.f0)
    return prob


def lrsp_generators(seed):
    """Named Philox generators, one per stream in ``LRSP_STREAMS``."""
    children = np.random.SeedSequence(seed).spawn(len(LRSP_STREAMS))
    return {name: np.random.Generator(np.random.Philox(ss)) for name, ss in zip(LRSP_STREAMS, children)}


def spectral_norm(A, rtol=1e-6, max_iter=10000):
    """Largest singular value of a sparse matrix by power iteration on ``A^T A``."""
    x = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
    est = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ x)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        x = w / nw
        if abs(nw - est) <= rtol * nw:
            return float(np.sqrt(nw))
        est = nw
    return float(np.sqrt(est))


def make_lrsp_matrix(m, n, density, seed):
    gens = lrsp_generators(seed)
    nnz = max(1, int(round(density * m * n)))
    idx = gens["pattern"].choice(m * n, size=nnz, replace=False, shuffle=False)
    vals = gens["values"].standard_normal(nnz)
    A = sparse.csr_matrix((vals, (idx // n, idx % n)), shape=(m, n))
    x0 = gens["x0"].standard_normal(n)
    labels = (gens["labels"].random(m) < expit(A @ x0)).astype(float)
    return A, x0, labels


def make_lrsp(m=10000, n=2000, density=1e-3, seed=0, fstar_iterations=10000):
    """Sparse logistic regression instance, deterministic in ``seed``.

    ``x0`` generates the labels and is also the starting point.  ``L_f`` is
    ``1.01 ||A||_2^2 / 4``.
    """
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    A, x0, labels = make_lrsp_matrix(m, n, density, seed)
    return lrsp_from_data(A, x0, labels, seed=seed, density=density, fstar_iterations=fstar_iterations)


def lrsp_from_data(A, x0, labels, seed=None, density=None, fstar_iterations=10000, L_f=None, f_star=None):
    A = sparse.csr_matrix(A)
    if A.nnz == 0 or not np.any(A.data):
        raise ValueError("design matrix is identically zero")
    if L_f is None:
        L_f = 1.01 * spectral_norm(A) ** 2 / 4.0
    m, n = A.shape
    meta = {"m": m, "n": n, "density": density, "seed": seed}
    prob = Problem("lrsp", n, LogisticOracle(A, labels), float(L_f), np.asarray(x0, dtype=float), np.nan, meta=meta)
    if f_star is None:
        f_star = estimate_fstar(prob, fstar_iterations)
    prob.f_star = float(f_star)
    return prob


def estimate_fstar(problem, iterations=10000):
    """Optimal value proxy from a fixed-step fast gradient run.

    Returns the smaller of the best primal value ``f(x_k)`` and the best
    composite value ``f(y_k) - ||grad f(y_k)||_*^2/(2 L_f)``.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    L, metric = problem.L_f, problem.metric
    x = v = problem.x0.copy()
    A = 0.0
    best_f = best_c = np.inf
    for _ in range(iterations):
        a = (1.0 + np.sqrt(1.0 + 4.0 * L * A)) / (2.0 * L)
        y = (A * x + a * v) / (A + a)
        fy, gy = problem.oracle(y)
        step = metric.solve(gy)
        best_c = min(best_c, fy - 0.5 * float(gy @ step) / L)
        x = y - step / L
        v = v - a * step
        A += a
        best_f = min(best_f, problem.oracle.value(x))
    est = min(best_f, best_c)
    log.info("f* estimate %.12g (primal %.12g, composite %.12g)", est, best_f, best_c)
    return float(est)


def write_problem(problem, prefix):
    """Write ``<prefix>.csv`` (matrix triplets) and ``<prefix>.json`` (metadata)."""
    if problem.name == "quad":
        mat = sparse.coo_matrix(problem.oracle.matrix)
    else:
        mat = problem.oracle.A.tocoo()
    with open(f"{prefix}.csv", "w") as fh:
        fh.write("row,col,value\n")
        for i, j, v in zip(mat.row, mat.col, mat.data):
            fh.write(f"{i},{j},{float(v)!r}\n")
    meta = dict(problem.meta, kind=problem.name, shape=list(mat.shape), L_f=problem.L_f,
                f_star=problem.f_star, x0=problem.x0.tolist())
    if problem.name == "lrsp":
        meta["labels"] = problem.oracle.labels.tolist()
    with open(f"{prefix}.json", "w") as fh:
        json.dump(meta, fh)


def read_problem(prefix):
    """Rebuild a problem written by ``write_problem``."""
    with open(f"{prefix}.json") as fh:
        meta = json.load(fh)
    rows, cols, vals = np.loadtxt(f"{prefix}.csv", delimiter=",", skiprows=1, ndmin=2).T
    mat = sparse.csr_matrix((vals, (rows.astype(int), cols.astype(int))), shape=tuple(meta["shape"]))
    x0 = np.array(meta["x0"])
    if meta["kind"] == "quad":
        n = mat.shape[1]
        return Problem("quad", n, QuadOracle(mat.toarray()), meta["L_f"], x0, meta["f_star"], np.zeros(n),
                       meta={k: meta[k] for k in ("n", "x0_rule") if k in meta})
    if meta["kind"] == "lrsp":
        return lrsp_from_data(mat, x0, meta["labels"], seed=meta.get("seed"), density=meta.get("density"),
                              L_f=meta["L_f"], f_star=meta["f_star"])
    raise ValueError(f"unknown problem kind {meta['kind']!r}")
