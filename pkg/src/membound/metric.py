"""Primal/dual Euclidean geometry shared by every other module.

The primal norm is ``||x||^2 = <Bx, x>`` and the dual norm is
``||g||_*^2 = <g, B^{-1} g>``.  Only identity and positive diagonal ``B``
are supported.
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Metric:
    """Metric operator ``B`` of an ``n``-dimensional space.

    Parameters
    ----------
    n : int
        Dimension.
    diag : array-like or None
        Positive diagonal of ``B``.  ``None`` means ``B = I``.
    """

    n: int
    diag: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("metric dimension must be >= 1")
        if self.diag is not None:
            d = np.asarray(self.diag, dtype=float).copy()
            if d.shape != (self.n,):
                raise ValueError(f"diagonal has shape {d.shape}, expected ({self.n},)")
            if not np.all(d > 0):
                raise ValueError("diagonal metric entries must be strictly positive")
            d.setflags(write=False)
            object.__setattr__(self, "diag", d)

    @classmethod
    def identity(cls, n):
        return cls(n)

    @classmethod
    def diagonal(cls, d):
        d = np.asarray(d, dtype=float)
        return cls(d.shape[0], d)

    @property
    def kind(self):
        return "identity" if self.diag is None else "diagonal"

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: got {v.shape[0]}, metric has {self.n}")
        return v

    def apply(self, x):
        """``Bx`` (primal to dual); works column-wise on 2-D input."""
        x = self._check(x)
        if self.diag is None:
            return x
        return x * (self.diag if x.ndim == 1 else self.diag[:, None])

    def solve(self, g):
        """``B^{-1} g`` (dual to primal); works column-wise on 2-D input."""
        g = self._check(g)
        if self.diag is None:
            return g
        return g / (self.diag if g.ndim == 1 else self.diag[:, None])

    def norm_sq(self, x):
        x = self._check(x)
        return float(x @ self.apply(x))

    def dual_norm_sq(self, g):
        g = self._check(g)
        return float(g @ self.solve(g))

    def gram(self, G):
        """Dual Gram matrix ``G^T B^{-1} G`` of the columns of ``G``."""
        G = self._check(G)
        return G.T @ self.solve(G)


def dual_norm_sq(g, metric):
    """Squared dual norm ``<g, B^{-1} g>``."""
    return metric.dual_norm_sq(g)


@dataclass(frozen=True)
class Parabola:
    """Canonical parabola ``w + (gamma/2) ||y - v||^2``."""

    gamma: float
    vertex: np.ndarray
    value: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("parabola curvature must be positive")
        object.__setattr__(self, "vertex", np.atleast_1d(np.asarray(self.vertex, dtype=float)))

    def __call__(self, y, metric=None):
        return parabola_eval(self, y, metric)


def parabola_eval(P, y, metric=None):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != P.vertex.shape:
        raise ValueError(f"dimension mismatch: point {y.shape} vs vertex {P.vertex.shape}")
    if metric is None:
        metric = Metric(y.shape[0])
    return P.value + 0.5 * P.gamma * metric.norm_sq(y - P.vertex)
