import numpy as np
import pytest

from fixrank import (
    AugmentedOperator,
    DenseOperator,
    InvalidInputError,
    NrsfmOperator,
    ProblemInstance,
    UnsupportedOperatorError,
    exact_delta_square,
    sharp,
    unsharp,
)
from fixrank.problems import gen_gaussian_operator, gen_rip_operator, random_rotations


def _adjoint_error(A, rng, trials=100):
    worst = 0.0
    for _ in range(trials):
        X = rng.standard_normal(A.shape)
        y = rng.standard_normal(A.size)
        lhs = A.apply(X) @ y
        rhs = np.sum(X * A.adjoint(y))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return worst


def test_dense_identity_is_column_stacking():
    A = DenseOperator(np.eye(6), (2, 3))
    X = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(A.apply(X), [0, 3, 1, 4, 2, 5])
    np.testing.assert_array_equal(A.adjoint(np.array([0, 3, 1, 4, 2, 5.0])), X)


def test_nrsfm_identity_cameras_extract_xy_rows():
    R = np.tile(np.eye(3)[:2], (1, 1, 1))
    A = NrsfmOperator(R, 4)
    X = np.arange(12.0).reshape(3, 4)
    M = A.project(sharp(X))
    np.testing.assert_array_equal(M, X[:2])


@pytest.mark.parametrize("variant", ["dense", "gaussian", "nrsfm", "augmented"])
def test_adjoint_identity(variant, rng):
    if variant == "dense":
        A = gen_rip_operator(3, 4, 0.3, 0)
    elif variant == "gaussian":
        A = gen_gaussian_operator(7, 3, 4, 1)
    elif variant == "nrsfm":
        A = NrsfmOperator(random_rotations(5, 2), 4)
    else:
        A = AugmentedOperator(NrsfmOperator(random_rotations(5, 3), 4), 0.7)
    assert _adjoint_error(A, rng) < 1e-10


def test_shape_mismatch_raises():
    A = DenseOperator(np.eye(4), (2, 2))
    with pytest.raises(InvalidInputError):
        A.apply(np.zeros((3, 3)))
    with pytest.raises(InvalidInputError):
        A.adjoint(np.zeros(5))
    with pytest.raises(InvalidInputError):
        DenseOperator(np.eye(4), (3, 2))


def test_exact_delta_examples():
    assert exact_delta_square(DenseOperator(np.eye(9), (3, 3))) == pytest.approx(0.0, abs=1e-14)
    assert exact_delta_square(DenseOperator(2 * np.eye(4), (2, 2))) == pytest.approx(3.0)
    assert exact_delta_square(gen_rip_operator(4, 4, 0.2, 7)) == pytest.approx(0.2, abs=1e-10)


def test_exact_delta_unsupported():
    with pytest.raises(UnsupportedOperatorError):
        exact_delta_square(gen_gaussian_operator(5, 2, 3, 0))
    with pytest.raises(UnsupportedOperatorError):
        exact_delta_square(NrsfmOperator(random_rotations(2, 0), 3))


def test_rip_inequality_all_ranks(rng):
    delta = 0.2
    A = gen_rip_operator(5, 4, delta, 11)
    for k in range(100):
        r = 1 + k % 4
        X = rng.standard_normal((5, r)) @ rng.standard_normal((r, 4))
        nx = np.sum(X * X)
        na = np.sum(A.apply(X) ** 2)
        assert (1 - delta) * nx - 1e-9 <= na <= (1 + delta) * nx + 1e-9


def test_sharp_roundtrip(rng):
    X = rng.standard_normal((12, 5))
    np.testing.assert_array_equal(unsharp(sharp(X)), X)
    X1 = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(sharp(X1), X1.reshape(1, 9))


def test_augmented_residual_adds_prior(rng):
    base = NrsfmOperator(random_rotations(4, 1), 3)
    A = AugmentedOperator(base, 2.5)
    b = rng.standard_normal(base.size)
    X = rng.standard_normal(base.shape)
    r_aug = A.apply(X) - A.augment_observations(b)
    D = X[1:] - X[:-1]
    assert r_aug @ r_aug == pytest.approx(np.sum((base.apply(X) - b) ** 2) + 2.5 * np.sum(D * D))


def test_operator_norms():
    assert NrsfmOperator(random_rotations(3, 0), 2).norm() == 1.0
    A = gen_rip_operator(3, 3, 0.2, 0)
    assert A.norm() == pytest.approx(np.sqrt(1.2))
    aug = AugmentedOperator(NrsfmOperator(random_rotations(6, 0), 2), 1.0)
    assert 1.0 <= aug.norm() <= np.sqrt(1 + 4) + 1e-9


def test_problem_instance_validation():
    A = DenseOperator(np.eye(4), (2, 2))
    with pytest.raises(InvalidInputError):
        ProblemInstance(A, np.zeros(3), 1)
    with pytest.raises(InvalidInputError):
        ProblemInstance(A, np.zeros(4), 3)
    P = ProblemInstance(A, np.ones(4), 1)
    assert P.data_fit(np.zeros((2, 2))) == pytest.approx(2.0)
