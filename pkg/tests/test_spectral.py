import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fixrank import InvalidInputError, numerical_rank, svd, truncate_rank
from fixrank.spectral import spectrum_rank

from conftest import random_lowrank


def test_svd_diagonal_reorders():
    f = svd(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(f.s, [3, 2, 1])


def test_svd_identity():
    f = svd(np.eye(3))
    np.testing.assert_allclose(f.s, [1, 1, 1])
    Q = f.U @ f.V.T
    np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-12)


def test_svd_reconstruction(rng):
    X = rng.standard_normal((5, 4))
    f = svd(X)
    assert np.linalg.norm(f.compose() - X) / np.linalg.norm(X) < 1e-10
    np.testing.assert_allclose(f.U.T @ f.U, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(f.V.T @ f.V, np.eye(4), atol=1e-10)
    assert np.all(np.diff(f.s) <= 0)


def test_svd_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_truncate_diagonal():
    np.testing.assert_allclose(truncate_rank(np.diag([3.0, 2.0, 1.0]), 2), np.diag([3.0, 2.0, 0.0]), atol=1e-14)


def test_truncate_full_rank_is_identity(rng):
    X = rng.standard_normal((4, 6))
    np.testing.assert_array_equal(truncate_rank(X, 4), X)


def test_truncate_exact_rank_fixed_point(rng):
    X = random_lowrank(rng, 6, 5, 2)
    assert np.linalg.norm(truncate_rank(X, 2) - X) < 1e-10 * np.linalg.norm(X)


@pytest.mark.parametrize("r", [-1, 5])
def test_truncate_rank_out_of_range(r):
    with pytest.raises(InvalidInputError):
        truncate_rank(np.ones((3, 4)), r)


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 6), st.integers(2, 6)), elements=st.floats(-10, 10)),
    st.integers(0, 6),
)
def test_truncate_rank_is_best_and_low_rank(X, r):
    r = min(r, min(X.shape))
    Xr = truncate_rank(X, r)
    s = np.linalg.svd(Xr, compute_uv=False)
    if s[0] > 0:
        assert np.all(s[r:] <= 1e-10 * s[0] + 1e-300)
    # Eckart-Young error
    sx = np.linalg.svd(X, compute_uv=False)
    assert np.linalg.norm(X - Xr) == pytest.approx(np.sqrt(np.sum(sx[r:] ** 2)), abs=1e-9)


def test_numerical_rank_threshold():
    assert numerical_rank(np.diag([1.0, 1e-8, 1e-10])) == 2
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert spectrum_rank([2.0, 1e-9 * 2.0]) == 1
