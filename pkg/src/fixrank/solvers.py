"""Proximal-gradient solvers for the fixed-rank relaxation and the nuclear baseline.

Both solvers use the same GIST-style loop: from the current iterate take a
gradient step on the data term with weight ``tau``, apply the proximal map of
the regularizer, and accept the candidate only if the full objective
decreases. ``tau`` is driven towards 1 after successes and pushed up after
failures.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, InvalidInputError, UnsupportedOperatorError
from .regularizer import _rr_spectrum, certify, eval_Rr, prox_rr
from .spectral import RANK_RTOL, numerical_rank, singular_values, svd, truncate_rank


@dataclass
class SolverConfig:
    tau0: float = 5.0
    decrease_divisor: float = 1.1
    increase_factor: float = 1.5
    max_iters: int = 5000
    step_tol: float = 1e-10
    stall_iters: int = 50
    rank_rtol: float = RANK_RTOL

    def __post_init__(self):
        if not self.tau0 >= 1.0:
            raise InvalidInputError(f"tau0 must be >= 1, got {self.tau0}")
        if not self.decrease_divisor > 1.0:
            raise InvalidInputError("decrease_divisor must exceed 1")
        if not self.increase_factor > 1.0:
            raise InvalidInputError("increase_factor must exceed 1")
        if self.max_iters < 1 or self.stall_iters < 1:
            raise InvalidInputError("iteration limits must be positive")


@dataclass
class SolverTrace:
    objectives: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    stop_reason: str = ""
    final_stationarity: float = float("nan")
    certificate: object = None

    def records(self):
        """One dict per iteration: ``k``, ``tau``, candidate ``F`` and ``accepted``."""
        return [
            {"k": k, "tau": t, "F": f, "accepted": a}
            for k, (t, f, a) in enumerate(zip(self.taus, self.candidates, self.accepted))
        ]

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")


def objective_rr(X, problem):
    """``R_r(X) + ||A X - b||^2``."""
    res = problem.residual(X)
    return eval_Rr(X, problem.target_rank) + float(res @ res)


def objective_nuclear(X, problem, mu):
    """``mu ||X||_* + ||A X - b||^2``."""
    res = problem.residual(X)
    return mu * float(np.sum(singular_values(X))) + float(res @ res)


def gradient_step(X, problem, tau):
    """``M = X - (A*(A X - b)) / tau``."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    return X - problem.operator.adjoint(problem.residual(X)) / tau


def nuclear_prox(M, mu, tau):
    """Minimizer of ``mu ||X||_* + tau ||X - M||_F^2``: shrink singular values by ``mu / (2 tau)``."""
    if mu < 0:
        raise InvalidInputError(f"mu must be nonnegative, got {mu}")
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    f = svd(M)
    x = np.maximum(f.s - mu / (2.0 * tau), 0.0)
    return f.compose(x)


def _prox_rr_step(M, r, tau):
    p = prox_rr(M, r, tau)
    return p.minimizer, _rr_spectrum(p.spectrum, r)


def _prox_nuclear_step(M, mu, tau):
    f = svd(M)
    x = np.maximum(f.s - mu / (2.0 * tau), 0.0)
    return f.compose(x), mu * float(np.sum(x))


def _gist_loop(problem, config, X0, prox, reg_value, need_unit_tau, safe_tau=None):
    # safe_tau: for a convex regularizer any tau >= ||A||^2 majorizes the data
    # term, so such steps cannot increase F; accept them up to rounding
    A = problem.operator
    b = problem.observations
    trace = SolverTrace()

    X = np.array(X0, dtype=float)
    res = A.apply(X) - b
    F = reg_value(X) + float(res @ res)
    trace.objectives.append(F)
    tau = float(config.tau0)
    rejects = 0

    for k in range(config.max_iters):
        grad = A.adjoint(res)
        Xn, rn = prox(X - grad / tau, tau)
        res_n = A.apply(Xn) - b
        Fn = rn + float(res_n @ res_n)
        trace.taus.append(tau)
        trace.candidates.append(Fn)
        trace.iterations = k + 1
        safe = safe_tau is not None and tau >= safe_tau and Fn <= F + 1e-14 * max(1.0, abs(F))
        if Fn < F or safe:
            step = float(np.linalg.norm(Xn - X)) / max(1.0, float(np.linalg.norm(X)))
            tau_used = tau
            X, res, F = Xn, res_n, Fn
            trace.accepted.append(True)
            trace.objectives.append(F)
            rejects = 0
            tau = (tau - 1.0) / config.decrease_divisor + 1.0
            if step < config.step_tol and (not need_unit_tau or tau_used < 1.0 + 1e-6):
                trace.converged = True
                trace.stop_reason = "small-step"
                break
        else:
            trace.accepted.append(False)
            rejects += 1
            tau = config.increase_factor * (tau - 1.0) + 1.0
            if rejects >= config.stall_iters:
                trace.stop_reason = "stall"
                break
    else:
        trace.stop_reason = "max-iters"
    return X, trace


def initial_point(problem):
    """Spectral initialization ``truncate_rank(A* b, r)``."""
    return truncate_rank(problem.operator.adjoint(problem.observations), problem.target_rank)


def gist_solve(problem, config=None, x0=None):
    """Minimize ``R_r(X) + ||A X - b||^2`` with the GIST loop.

    Parameters
    ----------
    problem : ProblemInstance
    config : SolverConfig, optional
    x0 : ndarray, optional
        Starting point; defaults to :func:`initial_point`.

    Returns
    -------
    X : ndarray
        Final iterate (numerical rank at most ``r``).
    trace : SolverTrace
    """
    config = config or SolverConfig()
    r = problem.target_rank
    if not r < min(problem.shape):
        raise InvalidInputError(f"target rank {r} must be below min{problem.shape}")
    X0 = initial_point(problem) if x0 is None else np.asarray(x0, dtype=float)
    if X0.shape != problem.shape:
        raise InvalidInputError(f"x0 has shape {X0.shape}, expected {problem.shape}")

    X, trace = _gist_loop(
        problem,
        config,
        X0,
        prox=lambda M, tau: _prox_rr_step(M, r, tau),
        reg_value=lambda X: eval_Rr(X, r),
        need_unit_tau=True,
    )
    Z = gradient_step(X, problem, 1.0)
    trace.final_stationarity = float(np.linalg.norm(X - truncate_rank(Z, r)))
    if problem.delta is not None and numerical_rank(X, config.rank_rtol) <= r:
        trace.certificate = certify(singular_values(Z), r, problem.delta)
    return X, trace


def nuclear_solve(problem, mu, config=None, x0=None):
    """Minimize ``mu ||X||_* + ||A X - b||^2`` with the same backtracking loop.

    A fixed point of the convex iteration is optimal at any ``tau``, so the
    small-step stop does not wait for ``tau`` to reach 1. Steps with
    ``tau >= ||A||^2`` are accepted even when rounding hides the decrease,
    which lets the iteration resolve singular values near the threshold.
    """
    if mu < 0:
        raise InvalidInputError(f"mu must be nonnegative, got {mu}")
    config = config or SolverConfig()
    X0 = problem.operator.adjoint(problem.observations) if x0 is None else np.asarray(x0, dtype=float)
    if X0.shape != problem.shape:
        raise InvalidInputError(f"x0 has shape {X0.shape}, expected {problem.shape}")
    X, trace = _gist_loop(
        problem,
        config,
        X0,
        prox=lambda M, tau: _prox_nuclear_step(M, mu, tau),
        reg_value=lambda X: mu * float(np.sum(singular_values(X))),
        need_unit_tau=False,
        safe_tau=problem.operator.norm() ** 2 * (1.0 + 1e-9),
    )
    trace.final_stationarity = nuclear_residual(X, problem, mu)
    return X, trace


def nuclear_residual(X, problem, mu):
    """Fixed-point residual ``||X - prox(X - A*(AX - b))||_F`` of the convex problem (zero iff optimal)."""
    return float(np.linalg.norm(X - nuclear_prox(gradient_step(X, problem, 1.0), mu, 1.0)))


def bisect_mu(problem, r, mu_lo, mu_hi, max_bisect=30, config=None):
    """Smallest ``mu`` whose nuclear-norm solution has rank at most ``r``.

    Returns ``(mu, X)`` with ``mu`` within ``(mu_hi - mu_lo) / 2**max_bisect``
    of the transition and ``X`` the solution at that ``mu``.
    """
    config = config or SolverConfig()
    if not mu_lo < mu_hi:
        raise BracketError(f"need mu_lo < mu_hi, got {mu_lo}, {mu_hi}")
    X_hi, _ = nuclear_solve(problem, mu_hi, config)
    if numerical_rank(X_hi, config.rank_rtol) > r:
        raise BracketError(f"solution at mu_hi={mu_hi} has rank above {r}")
    X_lo, _ = nuclear_solve(problem, mu_lo, config, x0=X_hi)
    if numerical_rank(X_lo, config.rank_rtol) <= r:
        return float(mu_lo), X_lo
    lo, hi = float(mu_lo), float(mu_hi)
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        X_mid, _ = nuclear_solve(problem, mid, config, x0=X_hi)
        if numerical_rank(X_mid, config.rank_rtol) <= r:
            hi, X_hi = mid, X_mid
        else:
            lo = mid
    return hi, X_hi


def mu_upper_bound(problem):
    """A ``mu`` at which the nuclear solution is zero: ``2 ||A* b||_2``."""
    return 2.0 * float(np.linalg.norm(problem.operator.adjoint(problem.observations), 2))


def is_stationary(X, problem, tol=1e-8, rank_rtol=RANK_RTOL):
    """Stationarity test for a rank-``<= r`` point of the relaxation.

    Computes ``Z = X - A*(A X - b)`` and checks that ``X`` is the best
    rank-``r`` approximation of ``Z``. When the problem carries an RIP
    constant the separation certificate on the spectrum of ``Z`` is returned
    too; otherwise the certificate is ``None`` (unknown).
    """
    X = np.asarray(X, dtype=float)
    r = problem.target_rank
    if numerical_rank(X, rank_rtol) > r:
        raise UnsupportedOperatorError(f"stationarity test needs rank(X) <= {r}")
    Z = gradient_step(X, problem, 1.0)
    gap = float(np.linalg.norm(X - truncate_rank(Z, r)))
    flag = gap <= tol * max(1.0, float(np.linalg.norm(Z)))
    cert = None
    if problem.delta is not None:
        cert = certify(singular_values(Z), r, problem.delta)
    return flag, Z, cert
