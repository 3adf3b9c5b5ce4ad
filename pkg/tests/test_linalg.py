import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tanlap.errors import NonFiniteError, SingularGramError
from tanlap.linalg import (RankPolicy, gram_solve, numerical_rank, principal_angle, projections,
                           projections_batch, svd_small)

TOL = 1e-12

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def small_matrices(draw):
    N = draw(st.integers(1, 4))
    n = draw(st.integers(1, 3))
    X = draw(arrays(np.float64, (N, n), elements=finite))
    # sometimes force a rank deficiency by copying a scaled column
    if n > 1 and draw(st.booleans()):
        X[:, -1] = draw(finite) * X[:, 0]
    return X


def test_svd_unit_column(backend):
    U, s, V = svd_small([[1.0], [0.0]])
    assert s.tolist() == [1.0]
    assert np.allclose(np.abs(U[:, 0]), [1, 0])


def test_svd_zero_matrix(backend):
    _, s, _ = svd_small(np.zeros((2, 2)))
    assert s.tolist() == [0.0, 0.0]


def test_svd_diagonal_sorted(backend):
    _, s, _ = svd_small([[3, 0], [0, 4], [0, 0]])
    assert np.allclose(s, [4, 3], atol=TOL)


def test_svd_rejects_nonfinite():
    with pytest.raises(NonFiniteError, match=r"index \(1, 0\)"):
        svd_small([[1.0, 2.0], [np.nan, 0.0]])


@settings(max_examples=200, deadline=None)
@given(small_matrices())
def test_svd_reconstructs(X):
    U, s, V = svd_small(X)
    k = min(X.shape)
    smax = s[0] if s[0] > 0 else 1.0
    assert np.allclose(U.T @ U, np.eye(k), atol=TOL)
    assert np.allclose(V.T @ V, np.eye(k), atol=TOL)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.max(np.abs(U @ np.diag(s) @ V.T - X)) <= 1e-12 * smax


@pytest.mark.parametrize("X, policy, expected", [
    (np.zeros((2, 2)), RankPolicy(), 0),
    ([[1, 2], [2, 4]], RankPolicy(rel_tol=1e-10), 1),
    # sigma = {1, 1e-14} against threshold 1e-10
    ([[1, 0], [0, 1e-14]], RankPolicy(rel_tol=1e-10, abs_tol=0.0), 1),
])
def test_numerical_rank_examples(X, policy, expected, backend):
    assert numerical_rank(X, policy) == expected


def test_rank_tie_at_threshold_counts_below():
    # threshold = 0 * 1 + 0.5 exactly; sigma_2 = 0.5 is not strictly above
    assert numerical_rank([[1, 0], [0, 0.5]], RankPolicy(rel_tol=0.0, abs_tol=0.5)) == 1


@settings(max_examples=100, deadline=None)
@given(small_matrices(), st.floats(min_value=1e-3, max_value=1e3))
def test_rank_scale_invariant(X, c):
    policy = RankPolicy(rel_tol=1e-9, abs_tol=0.0)
    assert numerical_rank(X, policy) == numerical_rank(c * X, policy)
    assert numerical_rank(X, policy) == numerical_rank(-c * X, policy)


def test_projection_examples(backend):
    assert np.array_equal(projections(np.zeros((2, 1))).perp, np.eye(2))
    pp = projections([[1.0], [0.0]])
    assert np.allclose(pp.par, [[1, 0], [0, 0]], atol=TOL)
    assert np.allclose(pp.perp, [[0, 0], [0, 1]], atol=TOL)
    assert np.allclose(projections([[1, 0], [0, 1], [0, 0]]).perp, np.diag([0, 0, 1]), atol=TOL)


def test_full_rank_has_exactly_empty_complement():
    pp = projections([[1.0, 0.3], [0.2, 2.0]])
    assert pp.rank == 2
    assert not pp.perp.any()


@settings(max_examples=300, deadline=None)
@given(small_matrices())
def test_projection_pair_invariants(X):
    pp = projections(X)
    N = X.shape[0]
    assert np.allclose(pp.par + pp.perp, np.eye(N), atol=TOL)
    assert np.allclose(pp.par @ pp.par, pp.par, atol=TOL)
    assert np.allclose(pp.perp @ pp.perp, pp.perp, atol=TOL)
    assert np.allclose(pp.par @ pp.perp, 0, atol=TOL)
    assert np.allclose(pp.par, pp.par.T, atol=TOL)
    assert int(round(np.trace(pp.par))) == pp.rank
    thr = RankPolicy().threshold(pp.singular_values[0])
    assert np.linalg.norm(pp.perp @ X) <= thr * np.sqrt(X.shape[1]) + 1e-12 * max(1, np.abs(X).max())
    if pp.rank == min(X.shape):
        assert np.allclose(pp.par @ X, X, atol=1e-12 * max(1.0, np.abs(X).max()))


def test_projections_batch_matches_single(backend):
    rng = np.random.default_rng(3)
    Xs = rng.standard_normal((4, 5, 3, 2))
    par, perp, rank, sigma = projections_batch(Xs)
    assert par.shape == (4, 5, 3, 3) and rank.shape == (4, 5) and sigma.shape == (4, 5, 2)
    one = projections(Xs[2, 3])
    assert np.array_equal(par[2, 3], one.par) and rank[2, 3] == one.rank


@pytest.mark.parametrize("Du, rhs, expected", [
    ([[1, 0], [0, 1], [0, 0]], [5, 7], [5, 7]),
    ([[2, 0], [0, 1], [0, 0]], [4, 1], [1, 1]),
    # columns (1,1), (1,0): Gram [[2,1],[1,1]]
    ([[1, 1], [1, 0]], [1, 0], [1, -1]),
])
def test_gram_solve_examples(Du, rhs, expected):
    assert np.allclose(gram_solve(np.array(Du, float), rhs), expected, atol=1e-14)


def test_gram_solve_singular():
    with pytest.raises(SingularGramError):
        gram_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 2), elements=st.floats(-10, 10)),
       arrays(np.float64, (2,), elements=st.floats(-10, 10)))
def test_gram_solve_against_lstsq(Du, rhs):
    s = np.linalg.svd(Du, compute_uv=False)
    # tiny gradients fall under the absolute floor and are rejected by design
    if s[0] < 1e-3 or s[-1] < 1e-2 * s[0]:
        return
    x = gram_solve(Du, rhs)
    G = Du.T @ Du
    oracle = np.linalg.lstsq(G, rhs, rcond=None)[0]
    assert np.allclose(x, oracle, rtol=1e-10, atol=1e-10 * np.abs(oracle).max())


def test_principal_angle_small_and_right():
    e1 = np.array([[1.0], [0.0], [0.0]])
    tilt = np.array([[np.cos(1e-9)], [np.sin(1e-9)], [0.0]])
    assert abs(principal_angle(e1, tilt) - 1e-9) < 1e-20
    assert abs(principal_angle(e1, np.array([[0.0], [1.0], [0.0]])) - np.pi / 2) < 1e-15
