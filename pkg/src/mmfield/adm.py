"""Augmented distance matrices (ADMs) and empirical curvature distributions.

An order-``n`` ADM of a field is the pair ``(R, b)`` obtained from an
``n``-tuple of points ``x_1..x_n``: ``R[i, j] = d(x_i, x_j)`` and
``b[i] = pi(x_i)``. Drawing the tuple from ``mu**n`` gives the curvature
distribution of order ``n``; here it is represented by ``N`` seeded draws.

Two ADMs are compared with

    rho_n = max( 1/2 * max_ij |R[i,j] - R'[i,j]|,  max_i d_B(b[i], b'[i]) )

and two empirical distributions by the Wasserstein distance with ground
cost ``rho_n``. As ``n`` grows that estimate increases towards the field
GW distance at ``p = inf``.

Sampling
--------
Point ``k`` of draw ``t`` is ``F^{-1}(u[t, k])`` where ``u`` comes from a
counter-based Philox stream keyed by ``(seed, stream, t)`` and ``F`` is the
CDF of ``mu`` listed in a canonical point order. Consequences:

* draws of order ``n`` are prefixes of draws of order ``n' > n``;
* the canonical order only depends on the isomorphism class of the field
  whenever colour refinement separates the points, so equal seeds on
  relabelled fields then give identical ADM multisets.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import csv
import io

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import rng
from .errors import SizeLimitError, ValidationError
from .metric import FiniteMetric, MMField, TargetSpace
from .transport import wasserstein_inf, wasserstein_p

DEFAULT_BOOTSTRAP = 40
CHUNK = 64
CSV_HEADER = ("n", "p", "N", "seed", "estimate", "lower_noise", "upper_noise", "oracle")


def canonical_order(f: MMField) -> np.ndarray:
    """Point order from colour refinement on (mass, value, distance profile); ties by index."""
    n = f.n
    sig = [(float(f.measure[i]), tuple(f.values[i].tolist())) for i in range(n)]
    colour = _ranks(sig)
    for _ in range(n):
        sig = [(colour[i], tuple(sorted(zip(f.d[i].tolist(), colour)))) for i in range(n)]
        new = _ranks(sig)
        if new == colour:
            break
        colour = new
    return np.array(sorted(range(n), key=lambda i: (colour[i], i)), dtype=np.int64)


def _ranks(keys) -> list[int]:
    uniq = sorted(set(keys))
    lookup = {k: r for r, k in enumerate(uniq)}
    return [lookup[k] for k in keys]


def draw_indices(f: MMField, n: int, N: int, seed: int, stream: int = rng.ADM_X) -> np.ndarray:
    """``(N, n)`` i.i.d. point indices with law ``mu``."""
    if n < 1 or N < 1:
        raise ValidationError("n and N must be >= 1")
    mu = np.clip(f.measure, 0.0, None)
    if mu.sum() <= 0:
        raise ValidationError("field has zero total measure")
    order = canonical_order(f)
    cdf = np.cumsum(mu[order])
    cdf /= cdf[-1]
    u = rng.uniforms(seed, stream, N, n)
    pos = np.searchsorted(cdf, u, side="right")
    # guard against u landing beyond a trailing run of zero-mass points
    pos = np.minimum(pos, np.nonzero(mu[order] > 0)[0][-1])
    return order[pos]


@dataclass(frozen=True)
class ADMSample:
    R: FiniteMetric
    b: np.ndarray
    provenance: tuple[int, int]

    @property
    def n(self) -> int:
        return self.R.n

    def truncate(self, k: int) -> "ADMSample":
        if not 1 <= k <= self.n:
            raise ValidationError(f"cannot truncate order {self.n} to {k}")
        return ADMSample(FiniteMetric(self.R.d[:k, :k]), self.b[:k], self.provenance)


class EmpiricalADM:
    """``N`` ADMs of order ``n`` stored as stacked arrays ``R`` (N, n, n) and ``b`` (N, n, dim)."""

    def __init__(self, R, b, target: TargetSpace, seed: int, stream: int = rng.ADM_X, indices=None):
        R = np.asarray(R, dtype=np.float64)
        b = np.asarray(b)
        if R.ndim != 3 or R.shape[1] != R.shape[2] or R.shape[0] < 1:
            raise ValidationError(f"R must have shape (N, n, n), got {R.shape}")
        if b.shape[:2] != R.shape[:2]:
            raise ValidationError("b does not match R")
        self.R = R
        self.b = b
        self.target = target
        self.seed = int(seed)
        self.stream = int(stream)
        self.indices = None if indices is None else np.asarray(indices, dtype=np.int64)
        for a in (self.R, self.b):
            a.setflags(write=False)

    @property
    def N(self) -> int:
        return self.R.shape[0]

    @property
    def n(self) -> int:
        return self.R.shape[1]

    @property
    def samples(self) -> list[ADMSample]:
        return [ADMSample(FiniteMetric(self.R[t]), self.b[t], (self.seed, t)) for t in range(self.N)]

    def truncate(self, k: int) -> "EmpiricalADM":
        idx = None if self.indices is None else self.indices[:, :k]
        return EmpiricalADM(self.R[:, :k, :k], self.b[:, :k], self.target, self.seed, self.stream, idx)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "seed": self.seed,
            "stream": self.stream,
            "indices": None if self.indices is None else self.indices.tolist(),
            "R": self.R.tolist(),
            "b": self.b.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, target: TargetSpace) -> "EmpiricalADM":
        b = np.asarray(data["b"], dtype=target.point_dtype)
        return cls(data["R"], b, target, data["seed"], data.get("stream", rng.ADM_X), data.get("indices"))

    def __eq__(self, other):
        if not isinstance(other, EmpiricalADM):
            return NotImplemented
        return (
            self.target == other.target
            and self.seed == other.seed
            and np.array_equal(self.R, other.R)
            and np.array_equal(self.b, other.b)
        )

    __hash__ = None


def adm_sample(f: MMField, n: int, N: int, seed: int, stream: int = rng.ADM_X) -> EmpiricalADM:
    idx = draw_indices(f, n, N, seed, stream)
    R = f.d[idx[:, :, None], idx[:, None, :]]
    b = f.values[idx]
    return EmpiricalADM(R, b, f.target, seed, stream, idx)


def rho_n(a: ADMSample, a2: ADMSample, target: TargetSpace) -> float:
    if a.n != a2.n:
        raise ValidationError(f"order mismatch: {a.n} vs {a2.n}")
    gap = 0.5 * float(np.max(np.abs(a.R.d - a2.R.d)))
    vals = float(np.max(target.dist(np.asarray(a.b), np.asarray(a2.b))))
    return max(gap, vals)


def rho_matrix(DX: EmpiricalADM, DY: EmpiricalADM) -> np.ndarray:
    """``N x N'`` matrix of rho_n between every pair of samples."""
    if DX.n != DY.n:
        raise ValidationError(f"order mismatch: {DX.n} vs {DY.n}")
    if DX.target != DY.target:
        raise ValidationError("empirical distributions live over different targets")
    out = np.empty((DX.N, DY.N))
    RY = DY.R.reshape(DY.N, -1)
    for s in range(0, DX.N, CHUNK):
        RX = DX.R[s : s + CHUNK].reshape(-1, 1, RY.shape[1])
        gap = 0.5 * np.max(np.abs(RX - RY[None]), axis=2)
        vals = np.max(DX.target.dist(DX.b[s : s + CHUNK, None], DY.b[None]), axis=2)
        out[s : s + CHUNK] = np.maximum(gap, vals)
    return out


def _uniform_w(cost: np.ndarray, p: float) -> float:
    n, m = cost.shape
    if np.isinf(p):
        return wasserstein_inf(cost, np.full(n, 1.0 / n), np.full(m, 1.0 / m))[0]
    if n == m:
        r, c = linear_sum_assignment(cost**p)
        return float(np.mean(cost[r, c] ** p)) ** (1.0 / p)
    return wasserstein_p(cost, np.full(n, 1.0 / n), np.full(m, 1.0 / m), p)[0]


def adm_wasserstein(DX: EmpiricalADM, DY: EmpiricalADM, p: float = 1.0) -> float:
    """Wasserstein-p between two empirical distributions with uniform weights."""
    if p < 1:
        raise ValidationError("p must be >= 1")
    return _uniform_w(rho_matrix(DX, DY), float(p))


def bootstrap_band(cost: np.ndarray, p: float, seed: int, reps: int = DEFAULT_BOOTSTRAP, level: float = 0.95):
    """Percentile interval of the estimate when both samples are resampled with replacement."""
    n, m = cost.shape
    vals = np.empty(reps)
    for r in range(reps):
        g = rng.generator(seed, rng.BOOTSTRAP, r)
        rows = g.integers(0, n, n)
        cols = g.integers(0, m, m)
        vals[r] = _uniform_w(cost[np.ix_(rows, cols)], p)
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(vals, [a, 1.0 - a])
    return float(lo), float(hi)


def null_noise_band(f: MMField, n: int, N: int, p: float, seed: int, reps: int = 20, level: float = 0.95) -> float:
    """Quantile of the estimate between two independent samples of the same field."""
    vals = []
    for r in range(reps):
        s = (seed + r * 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
        A = adm_sample(f, n, N, s, rng.NULL_BAND)
        B = adm_sample(f, n, N, s, rng.ADM_Y)
        vals.append(adm_wasserstein(A, B, p))
    return float(np.quantile(vals, level))


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    p: float
    N: int
    seed: int
    estimate: float
    lower_noise: float
    upper_noise: float
    oracle: float | None

    def as_list(self) -> list:
        return [self.n, self.p, self.N, self.seed, self.estimate, self.lower_noise, self.upper_noise, self.oracle]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(v) for v in r.as_list()])
    return buf.getvalue()


def exact_oracle(fX: MMField, fY: MMField) -> float | None:
    """Exact GW distance at ``p = inf`` when the instance is small enough, else None."""
    from .gw import gw_distance

    try:
        return gw_distance(fX, fY, np.inf, mode="exact").value
    except SizeLimitError:
        return None


def convergence_experiment(
    fX: MMField,
    fY: MMField,
    n_list,
    N: int,
    p: float,
    seed: int,
    bootstrap: int = DEFAULT_BOOTSTRAP,
    threads: int | None = None,
) -> list[ConvergenceRow]:
    """Estimates for each order in ``n_list`` from one pair of prefix-consistent samples.

    All orders reuse the same draws (truncated), so the estimates track the
    population monotonicity. Rows are computed in parallel when
    ``threads > 1``; the output order always follows ``n_list``.
    """
    n_list = [int(k) for k in n_list]
    if not n_list or min(n_list) < 1:
        raise ValidationError("n_list must hold positive orders")
    top = max(n_list)
    DX = adm_sample(fX, top, N, seed, rng.ADM_X)
    DY = adm_sample(fY, top, N, seed, rng.ADM_Y)
    oracle = exact_oracle(fX, fY)

    def row(k):
        cost = rho_matrix(DX.truncate(k), DY.truncate(k))
        est = _uniform_w(cost, p)
        lo, hi = bootstrap_band(cost, p, seed, bootstrap) if bootstrap > 0 else (est, est)
        return ConvergenceRow(k, float(p), N, seed, est, lo, hi, oracle)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(row, n_list))
    return [row(k) for k in n_list]


def reconstruction_check(fX: MMField, fY: MMField, n: int, N: int, seed: int, tol: float, p: float = 1.0) -> bool:
    """True when the two fields are indistinguishable at order ``n`` (estimate <= tol).

    One-sided: a pass does not prove isomorphism. Both fields are sampled
    from the same stream so that isomorphic fields with a separating
    canonical order produce the same multiset and an estimate of 0.
    """
    DX = adm_sample(fX, n, N, seed, rng.ADM_X)
    DY = adm_sample(fY, n, N, seed, rng.ADM_X)
    return adm_wasserstein(DX, DY, p) <= tol


def uniformity_fraction(f: MMField, n: int, N: int, p: float, eps: float, seed: int) -> float:
    """Fraction of ``N`` drawn ``n``-tuples whose empirical measure is within ``eps`` of ``mu``."""
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    idx = draw_indices(f, n, N, seed, rng.UNIFORMITY)
    counts = np.stack([np.bincount(row, minlength=f.n) for row in idx])
    mu = f.measure
    cache: dict[bytes, float] = {}
    hits = 0
    for c in counts:
        key = c.tobytes()
        if key not in cache:
            emp = c / n
            if np.isinf(p):
                cache[key] = wasserstein_inf(f.d, emp, mu)[0]
            else:
                cache[key] = wasserstein_p(f.d, emp, mu, p)[0]
        hits += cache[key] <= eps
    return hits / N
