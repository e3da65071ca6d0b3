"""Finite (pseudo-)metric spaces, target spaces and metric-measure fields.

Everything here is a thin, immutable wrapper around float64 numpy arrays.
Constructors check shapes only; the metric axioms and the Lipschitz
condition are reported by :func:`validate_metric` / :func:`validate_field`
so that broken inputs can still be loaded and diagnosed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_TOL = 1e-9
MEASURE_TOL = 1e-12
MAX_REPORTED = 100


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class FiniteMetric:
    """An ``n x n`` pseudo-distance matrix. Zeros off the diagonal are allowed."""

    __slots__ = ("_d",)

    def __init__(self, d):
        d = np.asarray(d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise ValidationError(f"distance matrix must be square and non-empty, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValidationError("distance matrix contains non-finite entries")
        self._d = _frozen(d)

    @property
    def d(self) -> np.ndarray:
        return self._d

    @property
    def n(self) -> int:
        return self._d.shape[0]

    @classmethod
    def from_points(cls, points, kind: str = "euclidean") -> "FiniteMetric":
        """Distance matrix of a point cloud under the l2 (``euclidean``) or l-inf (``sup``) norm."""
        x = np.asarray(points, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        diff = x[:, None, :] - x[None, :, :]
        if kind == "euclidean":
            d = np.sqrt(np.sum(diff * diff, axis=-1))
        elif kind == "sup":
            d = np.max(np.abs(diff), axis=-1) if x.shape[1] else np.zeros((len(x), len(x)))
        else:
            raise ValidationError(f"unknown point-cloud metric kind {kind!r}")
        return cls(d)

    def __eq__(self, other):
        return isinstance(other, FiniteMetric) and np.array_equal(self._d, other._d)

    def __hash__(self):
        return hash(self._d.tobytes())

    def __repr__(self):
        return f"FiniteMetric(n={self.n})"


class TargetSpace:
    """Codomain ``B`` of a field: one of four built-in kinds.

    Points are stored as rows of a 2-d array so that every kind shares one
    layout: ``euclidean``/``sup`` use ``k`` float columns, ``hamming`` uses
    ``l`` 0/1 columns and ``finite`` uses a single integer column holding an
    index into the target's own distance matrix.
    """

    KINDS = ("euclidean", "sup", "finite", "hamming")
    __slots__ = ("kind", "dim", "metric")

    def __init__(self, kind: str, dim: int, metric: FiniteMetric | None = None):
        if kind not in self.KINDS:
            raise ValidationError(f"unknown target kind {kind!r}")
        if kind == "finite":
            if metric is None:
                raise ValidationError("finite target needs a distance matrix")
            dim = 1
        elif dim < 1:
            raise ValidationError("target dimension must be >= 1")
        self.kind = kind
        self.dim = int(dim)
        self.metric = metric

    @classmethod
    def euclidean(cls, k: int = 1) -> "TargetSpace":
        return cls("euclidean", k)

    @classmethod
    def sup(cls, k: int = 1) -> "TargetSpace":
        return cls("sup", k)

    @classmethod
    def hamming(cls, length: int) -> "TargetSpace":
        return cls("hamming", length)

    @classmethod
    def finite(cls, d) -> "TargetSpace":
        return cls("finite", 1, d if isinstance(d, FiniteMetric) else FiniteMetric(d))

    @property
    def point_dtype(self):
        return np.int64 if self.kind in ("finite", "hamming") else np.float64

    def coerce(self, values) -> np.ndarray:
        """Return ``values`` as a read-only ``(n, dim)`` array, checking well-formedness."""
        v = np.asarray(values)
        if self.kind == "finite" and v.ndim == 1:
            v = v[:, None]
        elif self.kind != "finite" and v.ndim == 1 and self.dim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] != self.dim:
            raise ValidationError(f"values of shape {v.shape} do not fit target {self}")
        if self.kind in ("finite", "hamming"):
            if v.size and not np.all(np.equal(np.mod(v, 1), 0)):
                raise ValidationError(f"{self.kind} target values must be integers")
            v = v.astype(np.int64)
            if self.kind == "hamming" and v.size and not np.all((v == 0) | (v == 1)):
                raise ValidationError("hamming target values must be 0/1")
            if self.kind == "finite" and v.size and (v.min() < 0 or v.max() >= self.metric.n):
                raise ValidationError("finite target index out of range")
        else:
            v = v.astype(np.float64)
            if not np.all(np.isfinite(v)):
                raise ValidationError("target values must be finite")
        return _frozen(v)

    def dist(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise distance between point arrays broadcasting over leading axes."""
        if self.kind == "finite":
            return self.metric.d[a[..., 0], b[..., 0]]
        diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
        if self.kind == "euclidean":
            if self.dim == 1:
                return diff[..., 0]
            return np.sqrt(np.sum(diff * diff, axis=-1))
        if self.kind == "sup":
            return np.max(diff, axis=-1)
        return np.sum(diff, axis=-1)

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.dist(a[:, None, :], b[None, :, :])

    def __eq__(self, other):
        if not isinstance(other, TargetSpace):
            return NotImplemented
        if (self.kind, self.dim) != (other.kind, other.dim):
            return False
        return self.kind != "finite" or self.metric == other.metric

    def __hash__(self):
        return hash((self.kind, self.dim))

    def __repr__(self):
        if self.kind == "finite":
            return f"TargetSpace(finite, n={self.metric.n})"
        return f"TargetSpace({self.kind}, {self.dim})"


class MMField:
    """A finite metric-measure field: metric, probability vector, target and values."""

    __slots__ = ("metric", "measure", "target", "values")

    def __init__(self, metric: FiniteMetric, measure, target: TargetSpace, values):
        if not isinstance(metric, FiniteMetric):
            metric = FiniteMetric(metric)
        mu = np.asarray(measure, dtype=np.float64)
        if mu.shape != (metric.n,):
            raise ValidationError(f"measure has shape {mu.shape}, expected ({metric.n},)")
        vals = target.coerce(values)
        if vals.shape[0] != metric.n:
            raise ValidationError(f"{vals.shape[0]} values for a {metric.n}-point space")
        self.metric = metric
        self.measure = _frozen(mu)
        self.target = target
        self.values = vals

    @classmethod
    def uniform(cls, metric, target: TargetSpace, values) -> "MMField":
        if not isinstance(metric, FiniteMetric):
            metric = FiniteMetric(metric)
        return cls(metric, np.full(metric.n, 1.0 / metric.n), target, values)

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def d(self) -> np.ndarray:
        return self.metric.d

    def value_distances(self) -> np.ndarray:
        return self.target.pairwise(self.values, self.values)

    def __eq__(self, other):
        if not isinstance(other, MMField):
            return NotImplemented
        return (
            self.metric == other.metric
            and np.array_equal(self.measure, other.measure)
            and self.target == other.target
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self):
        return f"MMField(n={self.n}, target={self.target!r})"


@dataclass(frozen=True)
class Violation:
    kind: str
    indices: tuple
    slack: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    total: int = 0

    @property
    def ok(self) -> bool:
        return self.total == 0

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "total": self.total,
            "violations": [
                {"kind": v.kind, "indices": list(v.indices), "slack": v.slack}
                for v in self.violations
            ],
        }


class _Collector:
    def __init__(self, limit: int = MAX_REPORTED):
        self.items: list[Violation] = []
        self.total = 0
        self.limit = limit

    def add(self, kind: str, indices: Iterable[np.ndarray], slack: np.ndarray):
        idx = [np.asarray(i) for i in indices]
        count = len(slack)
        self.total += count
        room = self.limit - len(self.items)
        for k in range(min(room, count)):
            self.items.append(Violation(kind, tuple(int(i[k]) for i in idx), float(slack[k])))

    def report(self) -> ValidationReport:
        return ValidationReport(tuple(self.items), self.total)


def validate_metric(m: FiniteMetric | np.ndarray, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Brute-force check of the pseudo-metric axioms.

    Reports, in index order, negative entries, non-zero diagonal entries,
    asymmetric pairs ``(i, j)`` with ``i < j`` and triples ``(i, j, k)`` with
    ``d[i, k] > d[i, j] + d[j, k] + tol``. Slack is the amount of violation.
    At most the first 100 violations are listed; ``total`` counts all of them.
    """
    if tol < 0:
        raise ValidationError("tol must be >= 0")
    d = m.d if isinstance(m, FiniteMetric) else np.asarray(m, dtype=np.float64)
    n = d.shape[0]
    out = _Collector()
    i, j = np.nonzero(d < -tol)
    out.add("negative", (i, j), -d[i, j])
    diag = np.abs(np.diag(d))
    (i,) = np.nonzero(diag > tol)
    out.add("diagonal", (i,), diag[i])
    asym = np.abs(d - d.T)
    i, j = np.nonzero(np.triu(asym > tol, 1))
    out.add("symmetry", (i, j), asym[i, j])
    # one i-slab at a time keeps memory at O(n^2) and the report in (i, j, k) order
    for a in range(n):
        excess = d[a][None, :] - d[a][:, None] - d  # [j, k] = d[a,k] - d[a,j] - d[j,k]
        j, k = np.nonzero(excess > tol)
        if len(j):
            out.add("triangle", (np.full(len(j), a), j, k), excess[j, k])
    return out.report()


def validate_field(f: MMField, tol: float = DEFAULT_TOL, measure_tol: float = MEASURE_TOL) -> ValidationReport:
    """Check the 1-Lipschitz condition of the values and that the measure is a probability vector.

    Metric axioms are checked as well. Lipschitz violations are reported for
    ``i < j`` with slack ``d_B(values[i], values[j]) - d[i, j]``.
    """
    base = validate_metric(f.metric, tol)
    out = _Collector()
    out.items = list(base.violations)
    out.total = base.total
    excess = f.value_distances() - f.d
    i, j = np.nonzero(np.triu(excess > tol, 1))
    out.add("lipschitz", (i, j), excess[i, j])
    (i,) = np.nonzero(f.measure < -measure_tol)
    out.add("measure-negative", (i,), -f.measure[i])
    gap = float(np.sum(f.measure)) - 1.0
    if abs(gap) > measure_tol:
        out.add("measure-sum", (np.array([-1]),), np.array([abs(gap)]))
    return out.report()


def _index_array(idx, n: int, what: str) -> np.ndarray:
    a = np.asarray(list(idx) if not isinstance(idx, np.ndarray) else idx, dtype=np.int64)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError(f"{what} must be a non-empty index set")
    if a.min() < 0 or a.max() >= n:
        raise ValidationError(f"{what} has indices out of range for n={n}")
    return a


def hausdorff(m: FiniteMetric | np.ndarray, A: Sequence[int], B: Sequence[int]) -> float:
    d = m.d if isinstance(m, FiniteMetric) else np.asarray(m, dtype=np.float64)
    a = _index_array(A, d.shape[0], "A")
    b = _index_array(B, d.shape[0], "B")
    block = d[np.ix_(a, b)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def hausdorff_matrix(m: FiniteMetric, sets: Sequence[Sequence[int]]) -> np.ndarray:
    """Pairwise Hausdorff distances between the given index sets."""
    d = m.d
    k = len(sets)
    # distance from every point to each set, shape (n, k)
    to_set = np.stack([d[:, _index_array(s, m.n, "set")].min(axis=1) for s in sets], axis=1)
    out = np.zeros((k, k))
    for a, s in enumerate(sets):
        # sup over s of distance to each other set
        out[a] = to_set[np.asarray(s)].max(axis=0)
    return np.maximum(out, out.T)


def diameter(m: FiniteMetric) -> float:
    return float(m.d.max())


def submetric(m: FiniteMetric, indices: Sequence[int]) -> FiniteMetric:
    idx = _index_array(indices, m.n, "indices")
    return FiniteMetric(m.d[np.ix_(idx, idx)])


def isomorphic_relabel(f: MMField, perm: Sequence[int]) -> MMField:
    """Relabel points so that new point ``k`` is old point ``perm[k]``."""
    p = np.asarray(perm, dtype=np.int64)
    if p.shape != (f.n,) or not np.array_equal(np.sort(p), np.arange(f.n)):
        raise ValidationError(f"perm is not a permutation of range({f.n})")
    return MMField(FiniteMetric(f.d[np.ix_(p, p)]), f.measure[p], f.target, f.values[p])
