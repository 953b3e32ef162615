import numpy as np
import pytest

from fixrank import (
    BracketError,
    DenseOperator,
    InvalidInputError,
    ProblemInstance,
    SolverConfig,
    UnsupportedOperatorError,
    bisect_mu,
    gist_solve,
    gradient_step,
    is_stationary,
    nuclear_prox,
    nuclear_solve,
    numerical_rank,
    truncate_rank,
)
from fixrank.problems import SyntheticSpec, make_synthetic
from fixrank.solvers import mu_upper_bound, nuclear_residual, objective_nuclear, objective_rr

import oracles
from conftest import random_lowrank


def identity_problem(X, r, delta=0.0):
    m, n = X.shape
    return ProblemInstance(DenseOperator(np.eye(m * n), (m, n)), X.ravel(order="F"), r, delta=delta)


@pytest.fixture(scope="module")
def small_noiseless():
    return make_synthetic(SyntheticSpec(m=8, n=8, rank=2, delta=0.2, sigma=0.0, seed=3))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        SolverConfig(tau0=0.5)
    with pytest.raises(InvalidInputError):
        SolverConfig(decrease_divisor=1.0)
    with pytest.raises(InvalidInputError):
        SolverConfig(increase_factor=0.9)


def test_objective_examples(small_noiseless):
    P = small_noiseless
    assert objective_rr(P.ground_truth, P) == pytest.approx(0.0, abs=1e-9)
    b = P.observations
    assert objective_rr(np.zeros(P.shape), P) == pytest.approx(b @ b)
    X = random_lowrank(np.random.default_rng(0), 8, 8, 3)
    assert objective_rr(X, P) > P.data_fit(X) ** 2
    assert objective_nuclear(np.zeros(P.shape), P, 3.0) == pytest.approx(b @ b)


def test_gradient_step_examples(small_noiseless):
    X = np.arange(6.0).reshape(2, 3)
    P = identity_problem(X, 1)
    np.testing.assert_allclose(gradient_step(X, P, 3.0), X)
    Q = small_noiseless
    Y = np.ones(Q.shape)
    assert np.linalg.norm(gradient_step(Y, Q, 1e12) - Y) < 1e-9
    Z = gradient_step(Q.ground_truth, Q, 1.0)
    np.testing.assert_allclose(Z, Q.ground_truth, atol=1e-10)
    with pytest.raises(InvalidInputError):
        gradient_step(Y, Q, 0.0)


def test_gist_noiseless_recovery(small_noiseless):
    P = small_noiseless
    X, trace = gist_solve(P)
    assert P.data_fit(X) < 1e-6
    assert numerical_rank(X) <= P.target_rank
    assert trace.certificate is not None and trace.certificate.certified
    acc = [o for o in trace.objectives]
    assert all(b < a for a, b in zip(acc, acc[1:]))
    assert min(trace.taus) >= 1.0
    assert len(trace.accepted) == len(trace.taus) == trace.iterations


def test_gist_zero_observations():
    P = make_synthetic(SyntheticSpec(m=6, n=5, rank=2, delta=0.2, seed=1))
    Z = ProblemInstance(P.operator, np.zeros(P.operator.size), 2, delta=P.delta)
    X, _ = gist_solve(Z)
    assert np.linalg.norm(X) < 1e-12


def test_gist_fixed_point_unchanged(small_noiseless):
    P = small_noiseless
    X, trace = gist_solve(P, SolverConfig(tau0=1.0), x0=P.ground_truth)
    np.testing.assert_allclose(X, P.ground_truth, atol=1e-12)


def test_gist_rejected_steps_keep_iterate():
    P = make_synthetic(SyntheticSpec(m=8, n=8, rank=2, delta=0.2, sigma=0.5, seed=4))
    _, trace = gist_solve(P)
    # one objective entry per accepted step plus the initial value
    assert len(trace.objectives) == 1 + sum(trace.accepted)
    k = 0
    for cand, ok in zip(trace.candidates, trace.accepted):
        if ok:
            assert cand < trace.objectives[k]
            k += 1
            assert cand == trace.objectives[k]
        else:
            assert cand >= trace.objectives[k]
    assert trace.stop_reason in {"small-step", "stall", "max-iters"}
    recs = trace.records()
    assert set(recs[0]) == {"k", "tau", "F", "accepted"}


def test_gist_rank_must_be_below_min_dim():
    P = ProblemInstance(DenseOperator(np.eye(4), (2, 2)), np.ones(4), 2)
    with pytest.raises(InvalidInputError):
        gist_solve(P)


def test_nuclear_prox_examples():
    M = np.diag([3.0, 2.0, 1.0])
    np.testing.assert_allclose(nuclear_prox(M, 2.0, 1.0), np.diag([2.0, 1.0, 0.0]), atol=1e-14)
    np.testing.assert_allclose(nuclear_prox(M, 0.0, 1.0), M, atol=1e-14)
    np.testing.assert_allclose(nuclear_prox(M, 6.0, 1.0), 0.0, atol=1e-14)
    with pytest.raises(InvalidInputError):
        nuclear_prox(M, -1.0, 1.0)
    with pytest.raises(InvalidInputError):
        nuclear_prox(M, 1.0, 0.0)


def test_nuclear_solve_identity_cases():
    X0 = np.diag([3.0, 2.0, 1.0])
    P = identity_problem(X0, 2)
    X, _ = nuclear_solve(P, 0.0)
    np.testing.assert_allclose(X, X0, atol=1e-9)
    X, _ = nuclear_solve(P, 100.0)
    np.testing.assert_allclose(X, 0.0, atol=1e-12)
    X, _ = nuclear_solve(P, 2.0)
    np.testing.assert_allclose(X, np.diag([2.0, 1.0, 0.0]), atol=1e-8)


@pytest.fixture(scope="module")
def nuclear_4x4():
    rng = np.random.default_rng(42)
    Amat = rng.standard_normal((16, 16)) / 4
    b = rng.standard_normal(16)
    P = ProblemInstance(DenseOperator(Amat, (4, 4)), b, 1)
    return Amat, b, P


def test_nuclear_solve_matches_subgradient_oracle(nuclear_4x4):
    Amat, b, P = nuclear_4x4
    mu = 1.0
    X, trace = nuclear_solve(P, mu)
    ours = objective_nuclear(X, P, mu)
    ref = oracles.nuclear_subgradient_oracle(Amat, b, (4, 4), mu, iters=100000)
    # the oracle's best iterate is feasible, so it upper-bounds the optimum
    assert ours <= ref + 1e-6
    assert abs(ours - ref) < 1e-6
    assert nuclear_residual(X, P, mu) <= 1e-6
    assert all(b <= a * (1 + 1e-12) for a, b in zip(trace.objectives, trace.objectives[1:]))


def test_nuclear_solve_matches_cvxpy(nuclear_4x4):
    pytest.importorskip("cvxpy")
    Amat, b, P = nuclear_4x4
    X, _ = nuclear_solve(P, 1.0)
    ref, _ = oracles.nuclear_cvxpy_oracle(Amat, b, (4, 4), 1.0)
    assert abs(objective_nuclear(X, P, 1.0) - ref) < 1e-6


def test_bisect_mu_diag_example():
    P = identity_problem(np.diag([3.0, 2.0, 1.0]), 2)
    hi = mu_upper_bound(P)
    assert hi == pytest.approx(6.0)
    mu, X = bisect_mu(P, 2, 0.0, hi, max_bisect=30)
    width = hi / 2**30
    assert abs(mu - 2.0) <= 2 * width
    assert numerical_rank(X) <= 2
    below, _ = nuclear_solve(P, mu - width)
    assert numerical_rank(below) > 2


def test_bisect_mu_trivial_low_end():
    P = identity_problem(np.diag([3.0, 2.0, 0.0]), 2)
    mu, X = bisect_mu(P, 2, 0.0, 6.0)
    assert mu == 0.0


def test_bisect_mu_bad_bracket():
    P = identity_problem(np.diag([3.0, 2.0, 1.0]), 2)
    with pytest.raises(BracketError):
        bisect_mu(P, 2, 0.0, 1.0)
    with pytest.raises(BracketError):
        bisect_mu(P, 2, 3.0, 3.0)


def test_is_stationary_examples(small_noiseless):
    P = small_noiseless
    flag, Z, cert = is_stationary(P.ground_truth, P)
    assert flag
    np.testing.assert_allclose(Z, P.ground_truth, atol=1e-10)
    assert cert.z_r1 < 1e-10 and cert.certified

    flag, Z, _ = is_stationary(np.zeros(P.shape), P)
    assert not flag
    assert np.linalg.norm(truncate_rank(Z, P.target_rank)) > 0

    zeroA = ProblemInstance(DenseOperator(np.zeros((9, 9)), (3, 3)), np.zeros(9), 1)
    L = np.outer([1.0, 2, 3], [1.0, 0, 1])
    flag, Z, cert = is_stationary(L, zeroA)
    assert flag and cert is None
    np.testing.assert_allclose(Z, L)
    with pytest.raises(UnsupportedOperatorError):
        is_stationary(np.eye(3), zeroA)
