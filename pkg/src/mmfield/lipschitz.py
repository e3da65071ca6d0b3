"""Real functions on a finite metric space: Lipschitz classes and extensions.

Functions are plain length-``n`` float arrays aligned with a
:class:`~mmfield.metric.FiniteMetric`. A finitely supported function is just
a (support, values) pair passed to :func:`whitney_mcshane`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasibleError, ValidationError
from .metric import DEFAULT_TOL, FiniteMetric, MMField, TargetSpace


def _as_function(f, m: FiniteMetric) -> np.ndarray:
    v = np.asarray(f, dtype=np.float64)
    if v.shape != (m.n,):
        raise ValidationError(f"function has shape {v.shape}, metric has n={m.n}")
    return v


def sup_distance(f, g) -> float:
    """The sup metric between two real functions on the same space."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ValidationError("functions live on different spaces")
    return float(np.max(np.abs(f - g))) if f.size else 0.0


def lipschitz_excess(f, m: FiniteMetric) -> float:
    """max |f(x) - f(y)| - d(x, y); <= 0 iff f is 1-Lipschitz."""
    v = _as_function(f, m)
    return float(np.max(np.abs(v[:, None] - v[None, :]) - m.d))


def is_one_lipschitz(f, m: FiniteMetric, tol: float = DEFAULT_TOL) -> bool:
    return lipschitz_excess(f, m) <= tol


def is_delta(f, m: FiniteMetric, tol: float = DEFAULT_TOL) -> bool:
    """d(x, y) <= f(x) + f(y) for every pair (the diagonal included)."""
    v = _as_function(f, m)
    return bool(np.all(m.d <= v[:, None] + v[None, :] + tol))


def is_delta1(f, m: FiniteMetric, tol: float = DEFAULT_TOL) -> bool:
    return is_one_lipschitz(f, m, tol) and is_delta(f, m, tol)


def whitney_mcshane(values, m: FiniteMetric, A: Sequence[int], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Maximal 1-Lipschitz extension of a function given on the index set ``A``.

    ``values[k]`` is the value at ``A[k]``. The result is
    ``x -> min_k values[k] + d(A[k], x)``. Raises if ``A`` is empty or the data
    is not 1-Lipschitz on ``A`` (beyond ``tol``); no clamping is attempted.
    """
    a = np.asarray(list(A), dtype=np.int64)
    v = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        raise ValidationError("cannot extend from an empty set")
    if v.shape != a.shape:
        raise ValidationError("one value per point of A is required")
    if a.min() < 0 or a.max() >= m.n:
        raise ValidationError("A has indices out of range")
    sub = m.d[np.ix_(a, a)]
    excess = np.abs(v[:, None] - v[None, :]) - sub
    if np.max(excess) > tol:
        raise ValidationError(f"function is not 1-Lipschitz on A (excess {np.max(excess):.3g})")
    return np.min(v[:, None] + m.d[a], axis=0)


def restrict_extend(f, m: FiniteMetric, A: Sequence[int]) -> np.ndarray:
    """Restrict ``f`` to ``A`` and extend back, i.e. the composite extension-after-restriction map."""
    v = _as_function(f, m)
    a = list(A)
    return whitney_mcshane(v[a], m, a)


def kuratowski_row(m: FiniteMetric, x: int) -> np.ndarray:
    if not 0 <= x < m.n:
        raise ValidationError(f"index {x} out of range for n={m.n}")
    return np.array(m.d[x])


def pointwise_sup(fs: Sequence) -> np.ndarray:
    if len(fs) == 0:
        raise ValidationError("pointwise sup of an empty family")
    arr = np.asarray([np.asarray(f, dtype=np.float64) for f in fs])
    if arr.ndim != 2:
        raise ValidationError("functions must have equal lengths")
    return arr.max(axis=0)


@dataclass(frozen=True)
class OnePointCandidate:
    """Distances ``f`` from a new point to the existing ones and its field value ``b``."""

    f: np.ndarray
    b: np.ndarray

    @classmethod
    def make(cls, f, b, target: TargetSpace) -> "OnePointCandidate":
        fv = np.asarray(f, dtype=np.float64)
        bv = target.coerce(np.asarray(b).reshape(1, -1))[0]
        return cls(fv, bv)


def field_one_point_feasible(f: MMField, c: OnePointCandidate, tol: float = DEFAULT_TOL) -> bool:
    fv = _as_function(c.f, f.metric)
    b = f.target.coerce(np.asarray(c.b).reshape(1, -1))
    if not is_delta1(fv, f.metric, tol):
        return False
    gaps = f.target.dist(f.values, np.broadcast_to(b, f.values.shape))
    return bool(np.all(gaps <= fv + tol))


MASS_MODES = ("zero-mass", "uniform-reweight")


def field_one_point_extend(
    f: MMField, c: OnePointCandidate, new_mass_mode: str = "zero-mass", tol: float = DEFAULT_TOL
) -> MMField:
    """Append the candidate point to the field.

    ``zero-mass`` gives the new point no mass; ``uniform-reweight`` gives it
    ``1/(n+1)`` and scales the old measure by ``n/(n+1)``.
    """
    if new_mass_mode not in MASS_MODES:
        raise ValidationError(f"unknown mass mode {new_mass_mode!r}")
    if not field_one_point_feasible(f, c, tol):
        raise InfeasibleError("candidate is not a feasible one-point extension of the field")
    n = f.n
    fv = np.asarray(c.f, dtype=np.float64)
    d = np.zeros((n + 1, n + 1))
    d[:n, :n] = f.d
    d[n, :n] = d[:n, n] = fv
    if new_mass_mode == "zero-mass":
        mu = np.append(f.measure, 0.0)
    else:
        mu = np.append(f.measure * (n / (n + 1)), 1.0 / (n + 1))
    values = np.vstack([f.values, f.target.coerce(np.asarray(c.b).reshape(1, -1))])
    return MMField(FiniteMetric(d), mu, f.target, values)
