import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from mmfield import testing
from mmfield.errors import SizeLimitError, ValidationError
from mmfield.gw import (
    FieldPairCosts,
    embedding_bound_check,
    glue,
    gw_distance,
    gw_distance_profile,
    gw_objective_p,
    gw_uniform_certificate,
    halves_wasserstein,
)
from mmfield.metric import TargetSpace, isomorphic_relabel, validate_field, validate_metric
from mmfield.transport import Coupling
from tests.helpers import field
from tests.strategies import dyadic_fields, fields, gens

INF = float("inf")


def brute_force_inf(X, Y):
    """Minimum over all supports S of X x Y that carry a coupling of the sup-objective on S."""
    c = FieldPairCosts(X, Y)
    n, m = c.shape
    best = INF
    for k in range(1, n * m + 1):
        for S in itertools.combinations(range(n * m), k):
            S = list(S)
            val = max(c.m[np.ix_(S, S)].max() / 2, c.dB.ravel()[S].max())
            if val >= best:
                continue
            A = np.zeros((n + m, k))
            for col, a in enumerate(S):
                A[a // m, col] = 1
                A[n + a % m, col] = 1
            res = linprog(np.zeros(k), A_eq=A, b_eq=np.concatenate([X.measure, Y.measure]), bounds=(0, None), method="highs")
            if res.status == 0:
                best = val
    return best


# values produced by brute_force_inf on testing.generator(100, seed) instances
FROZEN_INF = {
    0: 0.6117130626298914,
    1: 0.07689395429090762,
    2: 0.07640691016044598,
    3: 0.6890191010141546,
    4: 0.263776509231738,
    5: 0.43007545811653936,
}


def _frozen_instance(seed):
    g = testing.generator(100, seed)
    n, m = int(g.integers(1, 4)), int(g.integers(1, 4))
    return testing.random_field(g, n, uniform=bool(seed % 2)), testing.random_field(g, m, uniform=bool(seed % 2))


@pytest.mark.parametrize("seed", sorted(FROZEN_INF))
def test_frozen_oracle_values(seed):
    X, Y = _frozen_instance(seed)
    assert gw_distance(X, Y).value == FROZEN_INF[seed]


@given(fields(n_max=3), fields(n_max=3))
def test_exact_inf_matches_brute_force(X, Y):
    assert gw_distance(X, Y).value == brute_force_inf(X, Y)


# --- objective and worked examples ------------------------------------------------


def test_objective_examples(worked_pair):
    X, Y = worked_pair
    c = FieldPairCosts(X, Y)
    diag = Coupling(np.eye(2) / 2)
    anti = Coupling(np.fliplr(np.eye(2)) / 2)
    assert gw_objective_p(diag, c, INF) == 1.0
    assert gw_objective_p(anti, c, INF) == 1.0
    assert gw_objective_p(diag, FieldPairCosts(X, X), 2.0) == 0.0


def test_worked_pair_distance(worked_pair):
    X, Y = worked_pair
    r = gw_distance(X, Y, INF)
    assert r.value == 1.0
    assert r.solver == "exact-oracle"
    assert r.value == gw_objective_p(r.coupling, FieldPairCosts(X, Y), INF)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, 8.0])
def test_worked_pair_finite_p_closed_form(worked_pair, p):
    # the value term carries mass 1/2 at gap 1 under every coupling; permutations zero the metric term
    X, Y = worked_pair
    r = gw_distance(X, Y, p)
    assert r.value == pytest.approx(0.5 ** (1 / p), abs=1e-12)
    assert r.error_bound == pytest.approx(0.0, abs=1e-12)


def test_identical_and_relabelled_fields_are_at_zero():
    f = field([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]], [0.0, 0.5, 1.0], measure=[0.2, 0.3, 0.5])
    for p in (1.0, 2.0, INF):
        assert gw_distance(f, f, p).value == 0.0
        assert gw_distance(f, isomorphic_relabel(f, [2, 0, 1]), p).value == 0.0


def test_target_mismatch_and_size_limit():
    a = field([[0.0]], [0.0])
    b = field([[0.0]], [[0.0, 0.0]], target=TargetSpace.euclidean(2))
    with pytest.raises(ValidationError):
        gw_distance(a, b)
    big = field(np.zeros((5, 5)), np.zeros(5))
    with pytest.raises(SizeLimitError):
        gw_distance(big, big)
    assert gw_distance(big, big, mode="local-search").value == 0.0


def test_certificate_describes_search(worked_pair):
    r = gw_distance(*worked_pair)
    assert r.certificate["levels_probed"] >= 1
    assert gw_distance(*worked_pair, p=2.0).certificate["candidates"] > 2


# --- cost invariants ----------------------------------------------------------------


@given(fields(n_max=3), fields(n_max=3))
def test_cost_tensor_symmetry(X, Y):
    c = FieldPairCosts(X, Y)
    assert np.array_equal(c.m, c.m.T)
    assert np.all(np.diag(c.m) == 0)


@given(fields(n_max=3, dim=1), fields(n_max=3, dim=1), gens(), st.floats(0.0, 0.2))
def test_costs_are_lipschitz_in_the_fields(X, Y, g, delta):
    def perturb(f):
        E = g.uniform(-delta, delta, f.d.shape)
        d = np.abs(f.d + (E + E.T) / 2)
        np.fill_diagonal(d, 0)
        v = f.values + g.uniform(-delta, delta, f.values.shape)
        return d, v

    dX, vX = perturb(X)
    dY, vY = perturb(Y)
    gapX = max(np.abs(dX - X.d).max(), np.abs(vX - X.values).max())
    gapY = max(np.abs(dY - Y.d).max(), np.abs(vY - Y.values).max())
    gap = max(gapX, gapY)
    c = FieldPairCosts(X, Y)
    m2 = np.abs(dX[:, None, :, None] - dY[None, :, None, :]).reshape(c.m.shape)
    dB2 = np.abs(vX[:, None, 0] - vY[None, :, 0])
    assert np.all(np.abs(m2 - c.m) <= 4 * gap + 1e-12)
    assert np.all(np.abs(dB2 - c.dB) <= 2 * gap + 1e-12)


# --- metric axioms, monotonicity, solvers -----------------------------------------------


@given(fields(n_max=3, uniform=True, dim=1), fields(n_max=3, uniform=True, dim=1), fields(n_max=3, uniform=True, dim=1))
def test_pseudo_metric_axioms_at_inf(X, Y, Z):
    xy, yx = gw_distance(X, Y).value, gw_distance(Y, X).value
    yz, xz = gw_distance(Y, Z).value, gw_distance(X, Z).value
    assert xy == yx
    assert gw_distance(X, X).value == 0.0
    assert xz <= xy + yz + 1e-8


@given(fields(n_min=2, n_max=3), fields(n_min=2, n_max=3))
def test_values_monotone_in_p_and_bounded_by_inf(X, Y):
    ps = [1.0, 2.0, 4.0, 8.0, INF]
    prof = gw_distance_profile(X, Y, ps)
    vals = [prof[p].value for p in ps]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    for p in ps[:-1]:
        r = prof[p]
        assert r.lower_bound <= r.value
        assert r.value == pytest.approx(gw_objective_p(r.coupling, FieldPairCosts(X, Y), p), abs=1e-9)


@given(fields(n_max=3), fields(n_max=3), st.sampled_from([1.0, 2.0, INF]))
def test_local_search_is_an_upper_bound(X, Y, p):
    exact = gw_distance(X, Y, p)
    ls = gw_distance(X, Y, p, mode="local-search", restarts=4, seed=1)
    slack = 0.0 if np.isinf(p) else exact.error_bound
    assert ls.value >= exact.value - slack - 1e-9
    assert ls.coupling.is_valid(X.measure, Y.measure)
    assert ls.certificate["upper_bound"] is True


def test_local_search_is_deterministic(worked_pair):
    a = gw_distance(*worked_pair, p=2.0, mode="local-search", seed=9)
    b = gw_distance(*worked_pair, p=2.0, mode="local-search", seed=9)
    assert np.array_equal(a.coupling.P, b.coupling.P) and a.value == b.value


# --- gluing ---------------------------------------------------------------------------


def test_glue_examples():
    a0, a1, b0 = field([[0.0]], [0.0]), field([[0.0]], [1.0]), field([[0.0]], [0.0])
    P = Coupling([[1.0]])
    Z, r = glue(a0, b0, P)
    assert r == 0.0 and Z.d[0, 1] == 0.0
    Z, r = glue(a0, a1, P)
    assert r == 1.0 and Z.d[0, 1] == 1.0
    assert validate_field(Z).ok


def test_glue_with_itself_along_the_diagonal():
    f = field([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]], [0.0, 0.5, 1.0])
    Z, r = glue(f, f, Coupling(np.eye(3) / 3))
    assert r == 0.0
    assert np.array_equal(Z.d[:3, 3:], f.d)


def test_glue_rejects_bad_couplings(worked_pair):
    X, Y = worked_pair
    with pytest.raises(ValidationError):
        glue(X, Y, Coupling([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValidationError):
        glue(X, Y, Coupling([[1.0]]))


@given(dyadic_fields(), dyadic_fields(), gens())
def test_glued_space_is_an_exact_field(X, Y, g):
    P = testing.random_coupling(g, X.measure, Y.measure)
    Z, r = glue(X, Y, P)
    assert validate_metric(Z.metric, tol=0.0).ok
    assert validate_field(Z, tol=0.0).ok
    assert halves_wasserstein(Z, X.n, INF) <= r + 1e-9


@given(fields(n_max=3, uniform=False), fields(n_max=3, uniform=False), gens(), st.sampled_from([1.0, 2.0, INF]))
def test_embedding_bound(X, Y, g, p):
    P = testing.random_coupling(g, X.measure, Y.measure)
    lhs, rhs, ok = embedding_bound_check(X, Y, P, p)
    assert ok and lhs <= rhs + 1e-8


def test_embedding_bound_examples(worked_pair):
    f = field([[0, 1], [1, 0]], [0.0, 0.5])
    assert embedding_bound_check(f, f, np.eye(2) / 2, INF) == (0.0, 0.0, True)
    X, Y = worked_pair
    lhs, rhs, ok = embedding_bound_check(X, Y, np.eye(2) / 2, INF)
    assert lhs == 1.0 and ok
    s0, s1 = field([[0.0]], [0.0]), field([[0.0]], [0.75])
    assert embedding_bound_check(s0, s1, [[1.0]], 2.0) == (0.75, 0.75, True)


# --- uniform-sequence certificate ------------------------------------------------------


def test_certificate_examples(worked_pair):
    X, Y = worked_pair
    f = field([[0, 1], [1, 0]], [0.0, 0.5])
    assert all(gw_uniform_certificate(f, f, k, seed=3) == 0.0 for k in (1, 5, 50))
    assert all(gw_uniform_certificate(X, Y, 8, seed=s) == 1.0 for s in range(20))
    one = gw_uniform_certificate(X, Y, 1, seed=0)
    assert one in (0.0, 1.0)  # dB of the one drawn cell, diagonal coupling
    with pytest.raises(ValidationError):
        gw_uniform_certificate(X, Y, 0)


@given(fields(n_max=3), fields(n_max=3), st.integers(1, 40), st.integers(0, 1000))
def test_certificate_never_exceeds_the_distance(X, Y, k, seed):
    exact = gw_distance(X, Y).value
    assert gw_uniform_certificate(X, Y, k, seed) <= exact + 1e-9
    assert gw_uniform_certificate(X, Y, 400, seed) == pytest.approx(exact, abs=1e-12)
