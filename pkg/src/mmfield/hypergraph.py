"""Community hypergraphs of a finite metric space.

At scale ``r`` the communities are the maximal cliques of the graph joining
points at distance ``<= r``. They are metrized by the Hausdorff distance of
the base space, weighted by size, and scored by p-centrality; the result can
be turned into an :class:`~mmfield.metric.MMField` with real values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import SizeLimitError, ValidationError
from .metric import FiniteMetric, MMField, TargetSpace, hausdorff_matrix, validate_field

BRUTE_FORCE_LIMIT = 12


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def maximal_cliques(adj) -> list[tuple[int, ...]]:
    """All maximal cliques of an undirected graph, as sorted tuples in sorted order.

    Bron-Kerbosch with Tomita pivoting over Python-int bitsets. ``adj`` is a
    boolean adjacency matrix; its diagonal is ignored.
    """
    a = np.asarray(adj, dtype=bool)
    n = a.shape[0]
    nbr = [sum(1 << int(j) for j in np.nonzero(a[i])[0] if j != i) for i in range(n)]
    out: list[tuple[int, ...]] = []

    def expand(R: int, P: int, X: int):
        if not P and not X:
            out.append(tuple(_bits(R)))
            return
        pivot = max(_bits(P | X), key=lambda u: (P & nbr[u]).bit_count())
        for v in list(_bits(P & ~nbr[pivot])):
            bit = 1 << v
            expand(R | bit, P & nbr[v], X & nbr[v])
            P &= ~bit
            X |= bit

    if n:
        expand(0, (1 << n) - 1, 0)
    return sorted(out)


def threshold_graph(m: FiniteMetric, r: float) -> np.ndarray:
    adj = m.d <= r
    np.fill_diagonal(adj, False)
    return adj


def maximal_cliques_bruteforce(m: FiniteMetric, r: float, limit: int = BRUTE_FORCE_LIMIT) -> list[tuple[int, ...]]:
    """Exhaustive oracle: filter every subset for cliqueness, then for maximality."""
    n = m.n
    if n > limit:
        raise SizeLimitError(f"brute-force clique search limited to n <= {limit}")
    close = m.d <= r
    cliques = []
    for size in range(1, n + 1):
        for s in combinations(range(n), size):
            if all(close[i, j] for i, j in combinations(s, 2)):
                cliques.append(frozenset(s))
    maximal = [c for c in cliques if not any(c < other for other in cliques)]
    return sorted(tuple(sorted(c)) for c in maximal)


@dataclass(frozen=True, eq=False)
class CommunityHypergraph:
    base: FiniteMetric
    r: float
    simplices: tuple[tuple[int, ...], ...]
    metric: FiniteMetric
    measure_exact: tuple[Fraction, ...]
    centrality: dict = field(default_factory=dict)

    @property
    def measure(self) -> np.ndarray:
        return np.array([float(w) for w in self.measure_exact])

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.simplices])


def p_centrality(dH: np.ndarray, sizes: np.ndarray, p: float) -> np.ndarray:
    """``lambda_p(s) = ((1/N) sum_t dH(s, t)**p |t|) ** (1/p)`` with ``N = sum |t|``."""
    if p < 1:
        raise ValidationError("centrality order must be >= 1")
    w = sizes / sizes.sum()
    if np.isinf(p):
        return np.max(np.where(w[None, :] > 0, dH, 0.0), axis=1)
    scale = dH.max()
    if scale == 0:
        return np.zeros(len(sizes))
    return scale * (((dH / scale) ** p) @ w) ** (1.0 / p)


def build_hypergraph(m: FiniteMetric, r: float, p_list: Sequence[float] = (1.0,)) -> CommunityHypergraph:
    if r < 0:
        raise ValidationError("scale r must be >= 0")
    simplices = tuple(maximal_cliques(threshold_graph(m, r)))
    dH = hausdorff_matrix(m, simplices)
    sizes = np.array([len(s) for s in simplices])
    total = int(sizes.sum())
    mu = tuple(Fraction(int(k), total) for k in sizes)
    cent = {float(p): p_centrality(dH, sizes, float(p)) for p in p_list}
    return CommunityHypergraph(m, float(r), simplices, FiniteMetric(dH), mu, cent)


def hypergraph_to_field(h: CommunityHypergraph, p: float = 1.0) -> MMField:
    """The hypergraph as a real-valued field whose values are p-centralities."""
    p = float(p)
    if p not in h.centrality:
        raise ValidationError(f"centrality for p={p} was not computed (have {sorted(h.centrality)})")
    f = MMField(h.metric, h.measure, TargetSpace.euclidean(1), h.centrality[p])
    report = validate_field(f)
    if not report.ok:
        # would contradict the Minkowski argument; refuse rather than emit a bad field
        raise ValidationError(f"centrality field failed validation: {report.violations[:3]}")
    return f
