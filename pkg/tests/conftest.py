import numpy as np
import pytest

from membound.bound import BundleModel, OracleRecord
from membound.metric import Metric

THREE_RECORDS = [(-1.0, 0.5, -0.5), (0.0, 0.5, 0.5), (1.0, 1.5, 1.5)]


def three_records():
    return [OracleRecord([z], f, [g]) for z, f, g in THREE_RECORDS]


@pytest.fixture
def three_model():
    return BundleModel.from_records(three_records(), 1.0)


class SmoothConvex:
    """``x'Mx/2 + b'x + alpha * softplus(w'x)`` with curvature at most ``L``.

    The Hessian is bounded by ``lambda_max(M) + alpha ||w||^2 / 4`` in the
    metric ``B = diag(metric_diag)``.
    """

    def __init__(self, rng, n, L, metric=None):
        self.metric = metric or Metric(n)
        b = np.ones(n) if self.metric.diag is None else self.metric.diag
        R = rng.standard_normal((n, n))
        M = R @ R.T
        # scale so that B^{-1/2} M B^{-1/2} has top eigenvalue 0.6 L
        S = M / np.sqrt(np.outer(b, b))
        M *= 0.6 * L / np.linalg.eigvalsh(S)[-1]
        w = rng.standard_normal(n) * np.sqrt(b)
        self.alpha = 0.4 * L * 4.0 / float(w @ (w / b))
        self.M, self.w, self.bvec = M, w, rng.standard_normal(n)
        self.L = L

    def __call__(self, x):
        t = float(self.w @ x)
        f = 0.5 * x @ self.M @ x + self.bvec @ x + self.alpha * np.logaddexp(0.0, t)
        g = self.M @ x + self.bvec + self.alpha * self.w / (1.0 + np.exp(-t))
        return float(f), g

    def records(self, rng, m, scale=2.0):
        out = []
        for _ in range(m):
            z = rng.standard_normal(self.metric.n) * scale
            f, g = self(z)
            out.append(OracleRecord(z, f, g))
        return out


def random_model(rng, m, n, L=1.0, diagonal=False):
    metric = Metric.diagonal(rng.uniform(0.5, 2.0, n)) if diagonal else Metric(n)
    fn = SmoothConvex(rng, n, L, metric)
    return fn, BundleModel.from_records(fn.records(rng, m), L, metric)


def random_simplex(rng, m):
    lam = rng.exponential(size=m)
    return lam / lam.sum()


@pytest.fixture(scope="session")
def quad():
    from membound.problems import make_quad

    return make_quad(1000)


def qp_brute_force_min(C, D, A, resolution=1e-3):
    """Exact minimum of ``(A/2) l'Cl - D'l`` over a small simplex.

    Enumerates every face, solves its KKT system and keeps feasible
    stationary points; a simplex grid guards against rank-deficient faces.
    """
    import itertools

    from membound.bound import simplex_grid

    m = D.shape[0]
    best = np.inf
    for r in range(1, m + 1):
        for S in itertools.combinations(range(m), r):
            S = list(S)
            K = np.zeros((r + 1, r + 1))
            K[:r, :r] = A * C[np.ix_(S, S)]
            K[:r, r] = K[r, :r] = 1.0
            rhs = np.concatenate([D[S], [1.0]])
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            if np.linalg.norm(K @ sol - rhs) > 1e-9 or np.any(sol[:r] < -1e-12):
                continue
            lam = np.zeros(m)
            lam[S] = np.maximum(sol[:r], 0.0)
            lam /= lam.sum()
            best = min(best, 0.5 * A * lam @ C @ lam - D @ lam)
    grid = simplex_grid(m, resolution)
    vals = 0.5 * A * np.einsum("ij,jk,ik->i", grid, C, grid) - grid @ D
    return min(best, vals.min())


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
