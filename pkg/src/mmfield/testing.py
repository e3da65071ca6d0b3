"""Random instance generators shared by the test-suite and the acceptance runner.

Field values are built as ``x -> min_a (c_a + d(a, x))``: a minimum of
1-Lipschitz functions, hence 1-Lipschitz for any anchors ``c``. The
``dyadic`` generators keep every distance and value a multiple of 1/8 so
that sums and maxima are exact in floating point.
"""
from __future__ import annotations

import numpy as np
from scipy.sparse.csgraph import floyd_warshall

from . import rng
from .metric import FiniteMetric, MMField, TargetSpace


def generator(seed: int, draw: int = 0) -> np.random.Generator:
    return rng.generator(seed, rng.TESTING, draw)


def lipschitz_values(g: np.random.Generator, m: FiniteMetric, k: int = 1, spread: float = 1.0, dyadic: bool = False):
    """``(n, k)`` values, each column ``min_a (c_a + d(a, .))`` over a random anchor set."""
    n = m.n
    cols = []
    for _ in range(k):
        anchors = g.choice(n, size=int(g.integers(1, n + 1)), replace=False)
        c = g.random(anchors.size) * spread
        if dyadic:
            c = np.round(c * 8) / 8
        cols.append(np.min(c[:, None] + m.d[anchors], axis=0))
    return np.stack(cols, axis=1)


def random_measure(g: np.random.Generator, n: int, uniform: bool = True) -> np.ndarray:
    if uniform:
        return np.full(n, 1.0 / n)
    w = g.random(n) + 0.05
    return w / w.sum()


def random_field(
    g: np.random.Generator,
    n: int,
    dim: int = 1,
    target_dim: int = 1,
    uniform: bool = True,
    kind: str = "euclidean",
) -> MMField:
    pts = g.random((n, dim))
    m = FiniteMetric.from_points(pts, kind)
    vals = lipschitz_values(g, m, target_dim)
    return MMField(m, random_measure(g, n, uniform), TargetSpace.euclidean(target_dim), vals)


def dyadic_field(g: np.random.Generator, n: int, dim: int = 2, uniform: bool = True) -> MMField:
    """Points on the 1/8 grid under the sup norm; all arithmetic stays exact."""
    pts = g.integers(0, 9, size=(n, dim)) / 8.0
    m = FiniteMetric.from_points(pts, "sup")
    vals = lipschitz_values(g, m, 1, dyadic=True)
    return MMField(m, random_measure(g, n, uniform), TargetSpace.euclidean(1), vals)


def graph_metric(g: np.random.Generator, n: int, max_weight: int = 4, density: float = 0.5) -> FiniteMetric:
    """Shortest-path metric of a random connected graph with integer weights (exact, ties frequent)."""
    w = np.zeros((n, n))
    for i in range(1, n):  # random spanning tree keeps it connected
        j = int(g.integers(0, i))
        w[i, j] = w[j, i] = g.integers(1, max_weight + 1)
    extra = np.triu(g.random((n, n)) < density, 1)
    ew = g.integers(1, max_weight + 1, size=(n, n))
    w = np.where(extra & (w == 0), ew, w)
    w = np.maximum(w, w.T)
    return FiniteMetric(floyd_warshall(w, directed=False))


def random_coupling(g: np.random.Generator, mu, nu) -> np.ndarray:
    """A coupling of ``mu`` and ``nu``: a random polytope vertex mixed with the product coupling.

    The mixing weight is 0 with probability 1/3 so that sparse supports are
    common; marginals are exact up to rounding.
    """
    from .transport import wasserstein_p

    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    _, V = wasserstein_p(g.random((mu.size, nu.size)), mu, nu, 1.0)
    t = 0.0 if g.random() < 1 / 3 else g.random()
    return (1.0 - t) * V.P + t * np.outer(mu, nu)
