"""Discrete optimal transport: couplings, Wasserstein-p and Wasserstein-infinity.

All solvers are exact. General instances go through the HiGHS simplex in
``scipy.optimize.linprog``; uniform marginals take combinatorial fast paths
(``linear_sum_assignment`` for equal sizes, integer max-flow for the
bottleneck feasibility problems).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse.csgraph import maximum_flow

from .errors import InfeasibleError, SizeLimitError, ValidationError

MARGINAL_TOL = 1e-9
SUPPORT_EPS = 1e-12

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass(frozen=True, eq=False)
class Coupling:
    """A joint probability matrix ``P`` with row sums ``mu`` and column sums ``nu``."""

    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=np.float64)
        if P.ndim != 2:
            raise ValidationError("coupling must be a matrix")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def shape(self):
        return self.P.shape

    def support(self, eps: float = SUPPORT_EPS) -> np.ndarray:
        """Boolean mask of cells carrying more than ``eps`` mass."""
        return self.P > eps

    def marginal_error(self, mu, nu) -> float:
        return float(
            max(
                np.max(np.abs(self.P.sum(axis=1) - np.asarray(mu))),
                np.max(np.abs(self.P.sum(axis=0) - np.asarray(nu))),
            )
        )

    def is_valid(self, mu, nu, tol: float = MARGINAL_TOL) -> bool:
        return bool(np.all(self.P >= -tol) and self.marginal_error(mu, nu) <= tol)


def _check_inputs(cost, mu, nu):
    cost = np.asarray(cost, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if cost.shape != (mu.size, nu.size):
        raise ValidationError(f"cost shape {cost.shape} does not match marginals ({mu.size}, {nu.size})")
    if np.any(cost < 0) or not np.all(np.isfinite(cost)):
        raise ValidationError("cost must be finite and nonnegative")
    if np.any(mu < 0) or np.any(nu < 0):
        raise ValidationError("marginals must be nonnegative")
    if abs(mu.sum() - nu.sum()) > MARGINAL_TOL:
        raise InfeasibleError(f"marginal masses differ: {mu.sum()!r} vs {nu.sum()!r}")
    return cost, mu, nu


def _uniform_size(w: np.ndarray) -> int | None:
    """``len(w)`` if ``w`` is the uniform probability vector, else None."""
    n = w.size
    if n and np.all(w == w[0]) and abs(w[0] * n - 1.0) <= 1e-12:
        return n
    return None


def _clean(P: np.ndarray, eps: float = SUPPORT_EPS) -> np.ndarray:
    P = np.where(P > eps, P, 0.0)
    return P


def _lp_transport(cost, mu, nu, mask=None):
    """Min-cost coupling restricted to ``mask`` (all cells if None); None if infeasible."""
    n, m = cost.shape
    if mask is None:
        mask = np.ones((n, m), dtype=bool)
    rows, cols = np.nonzero(mask)
    k = rows.size
    if k == 0:
        return None
    var = np.arange(k)
    A = sparse.vstack(
        [
            sparse.csr_matrix((np.ones(k), (rows, var)), shape=(n, k)),
            sparse.csr_matrix((np.ones(k), (cols, var)), shape=(m, k)),
        ]
    ).tocsr()
    b = np.concatenate([mu, nu])
    res = linprog(
        cost[rows, cols], A_eq=A, b_eq=b, bounds=(0, None), method="highs", options=_HIGHS_OPTIONS
    )
    if res.status != 0:
        return None
    P = np.zeros((n, m))
    P[rows, cols] = np.maximum(res.x, 0.0)
    P = _clean(P)
    if Coupling(P).marginal_error(mu, nu) > MARGINAL_TOL:
        return None
    return P


def _flow_transport(mask, n: int, m: int):
    """Coupling of uniform marginals supported in ``mask`` via integer max-flow, or None."""
    # scaled by n*m: row i supplies m units, column j absorbs n units
    src, sink = 0, n + m + 1
    rows, cols = np.nonzero(mask)
    heads = np.concatenate([np.zeros(n, dtype=np.int64), rows + 1, np.arange(n + 1, n + m + 1)])
    tails = np.concatenate([np.arange(1, n + 1), cols + n + 1, np.full(m, sink)])
    caps = np.concatenate([np.full(n, m), np.full(rows.size, m), np.full(m, n)]).astype(np.int32)
    g = sparse.csr_matrix((caps, (heads, tails)), shape=(n + m + 2, n + m + 2))
    res = maximum_flow(g, src, sink)
    if res.flow_value != n * m:
        return None
    flow = res.flow.toarray()[1 : n + 1, n + 1 : n + m + 1]
    return np.maximum(flow, 0) / float(n * m)


def feasible_coupling(mask, mu, nu, cost=None):
    """A coupling of ``mu`` and ``nu`` supported inside ``mask``, or None.

    When ``cost`` is given the general path returns the cheapest such coupling.
    """
    mask = np.asarray(mask, dtype=bool)
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    n, m = mask.shape
    # every charged row/column must touch the mask
    if np.any(~mask.any(axis=1) & (mu > 0)) or np.any(~mask.any(axis=0) & (nu > 0)):
        return None
    un, um = _uniform_size(mu), _uniform_size(nu)
    if un is not None and um is not None and cost is None:
        P = _flow_transport(mask, n, m)
    else:
        c = np.zeros((n, m)) if cost is None else np.asarray(cost, dtype=np.float64)
        P = _lp_transport(c, mu, nu, mask)
    return None if P is None else Coupling(P)


def wasserstein_p(cost, mu, nu, p: float = 1.0):
    """Exact p-Wasserstein cost ``(min_P sum P * cost**p) ** (1/p)`` and an optimal coupling.

    Parameters
    ----------
    cost : (n, m) array
        Ground distances, nonnegative.
    mu, nu : (n,), (m,) arrays
        Marginals of equal total mass (within 1e-9).
    p : float
        Order, ``1 <= p < inf``. Use :func:`wasserstein_inf` for ``p = inf``.

    Returns
    -------
    value : float
    coupling : Coupling
    """
    if not 1 <= p < np.inf:
        raise ValidationError(f"p must be finite and >= 1, got {p}")
    cost, mu, nu = _check_inputs(cost, mu, nu)
    c = cost**p
    n, m = cost.shape
    if n == m and _uniform_size(mu) and _uniform_size(nu):
        r, s = linear_sum_assignment(c)
        P = np.zeros((n, m))
        P[r, s] = 1.0 / n
    else:
        P = _lp_transport(c, mu, nu)
        if P is None:
            raise InfeasibleError("transport LP failed")
    value = float(np.sum(P * c)) ** (1.0 / p)
    return value, Coupling(P)


def wasserstein_inf(cost, mu, nu, support_eps: float = SUPPORT_EPS):
    """Bottleneck transport: minimise the largest cost on the support of the coupling.

    Bisection over the sorted distinct cost values; each probe is a
    feasibility flow on ``{cost <= t}``. Returns the optimal threshold and a
    witness coupling whose support lies inside it.
    """
    cost, mu, nu = _check_inputs(cost, mu, nu)
    active = np.outer(mu > 0, nu > 0)
    levels = np.unique(cost[active]) if active.any() else np.array([0.0])
    lo, hi = 0, levels.size - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        P = feasible_coupling(cost <= levels[mid], mu, nu)
        if P is not None:
            best, hi = (mid, P), mid - 1
        else:
            lo = mid + 1
    if best is None:
        raise InfeasibleError("no coupling found")
    _, P = best
    supp = P.support(support_eps)
    value = float(cost[supp].max()) if supp.any() else 0.0
    return value, P


def sup_cost(P: Coupling, cost, support_eps: float = SUPPORT_EPS) -> float:
    supp = P.support(support_eps)
    return float(np.asarray(cost)[supp].max()) if supp.any() else 0.0


def _is_spanning_tree(cells, n: int, m: int) -> bool:
    parent = list(range(n + m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in cells:
        ra, rb = find(i), find(n + j)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def _tree_solution(cells, mu, nu):
    """Solve the transportation equalities on a spanning tree by leaf peeling."""
    row = list(mu)
    col = list(nu)
    remaining = list(cells)
    P = {}
    while remaining:
        for idx, (i, j) in enumerate(remaining):
            if sum(1 for a, _ in remaining if a == i) == 1:
                v = row[i]
                break
            if sum(1 for _, b in remaining if b == j) == 1:
                v = col[j]
                break
        else:  # pragma: no cover - a tree always has a leaf
            raise AssertionError("not a tree")
        P[(i, j)] = v
        row[i] -= v
        col[j] -= v
        remaining.pop(idx)
    return P


def enumerate_extreme_couplings(mu, nu, max_n: int = 4) -> list[Coupling]:
    """All vertices of the transportation polytope ``C(mu, nu)``.

    Every vertex is the unique solution supported on some spanning tree of
    the complete bipartite graph, so we enumerate trees, solve, and keep the
    nonnegative solutions (deduplicated; degenerate marginals make several
    trees share a vertex). Output order is deterministic.
    """
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    n, m = mu.size, nu.size
    if n > max_n or m > max_n:
        raise SizeLimitError(f"vertex enumeration limited to {max_n}x{max_n}, got {n}x{m}")
    if abs(mu.sum() - nu.sum()) > MARGINAL_TOL:
        raise InfeasibleError("marginal masses differ")
    cells = [(i, j) for i in range(n) for j in range(m)]
    seen = {}
    for tree in itertools.combinations(cells, n + m - 1):
        if not _is_spanning_tree(tree, n, m):
            continue
        sol = _tree_solution(tree, mu, nu)
        if min(sol.values()) < -1e-12:
            continue
        P = np.zeros((n, m))
        for (i, j), v in sol.items():
            P[i, j] = max(v, 0.0)
        key = tuple(np.round(P.ravel(), 12))
        seen.setdefault(key, P)
    return [Coupling(seen[k]) for k in sorted(seen)]
