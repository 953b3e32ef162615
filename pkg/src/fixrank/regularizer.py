"""The fixed-rank regularizer ``R_r``, its convex companion ``G`` and its prox.

For a matrix with singular values ``x`` (nonincreasing),

    G(x)  = max_z  -sum_{i<=r} z_i^2 + 2 <z, x>
    R_r(x) = G(x) - ||x||^2

The maximizing ``z`` has the form ``z_i = max(x_i, s)`` for ``i <= r`` and
``z_i = s`` beyond, where ``s`` maximizes a one-dimensional concave
function whose derivative is piecewise linear. ``G`` is convex and equals
the squared spectral k-support norm; ``R_r`` vanishes exactly on matrices
of rank at most ``r``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError, UnsupportedOperatorError
from .spectral import RANK_RTOL, as_matrix, as_spectrum, spectrum_rank, svd, truncate_rank


@dataclass(frozen=True)
class ProxResult:
    minimizer: np.ndarray
    spectrum: np.ndarray
    s_value: float
    objective: float
    degenerate: bool


@dataclass(frozen=True)
class Certificate:
    """Outcome of the separation test ``z_{r+1} < (1 - 2 delta) z_r``."""

    z_r: float
    z_r1: float
    delta_2r: float
    certified: bool
    margin: float

    def to_dict(self):
        return asdict(self)


def _check_rank(x, r):
    if not 1 <= r < x.size:
        raise InvalidInputError(f"rank {r} must satisfy 1 <= r < {x.size}")


def s_star(x, r):
    """Maximizer ``s`` of the inner one-dimensional problem.

    Solves ``sum_{i<=r} (s - x_i)^+ = sum_{i>r} x_i`` exactly by walking the
    breakpoints ``x_r <= x_{r-1} <= ... <= x_1``. When the tail is zero the
    optimum is an interval and ``x_r`` is returned.
    """
    x = as_spectrum(x)
    _check_rank(x, r)
    return _s_star(x, r)


def _s_star(x, r):
    tail = float(np.sum(x[r:]))
    top = x[:r]
    if tail <= 0.0:
        return float(top[-1])
    # with the k smallest top entries active: k s - sum(active) = tail
    csum = np.cumsum(top[::-1])
    for k in range(1, r + 1):
        s = (tail + csum[k - 1]) / k
        if k == r or s <= top[r - k - 1]:
            return float(s)
    raise AssertionError("unreachable")


def _G_terms(x, r, s):
    z_top = np.maximum(x[:r], s)
    return float(np.sum(2.0 * z_top * x[:r] - z_top**2) + 2.0 * s * np.sum(x[r:]))


def eval_G(x, r):
    """``G = R_r + ||.||^2`` evaluated on a singular-value vector."""
    x = as_spectrum(x)
    _check_rank(x, r)
    return _G_terms(x, r, _s_star(x, r))


def _rr_spectrum(x, r):
    # cancellation-free form of G(x) - ||x||^2
    s = _s_star(x, r)
    gap = np.maximum(s - x[:r], 0.0)
    tail = x[r:]
    return float(np.sum(tail * (2.0 * s - tail)) - np.sum(gap**2))


def eval_Rr_spectrum(x, r):
    x = as_spectrum(x)
    _check_rank(x, r)
    return _rr_spectrum(x, r)


def eval_Rr(X, r):
    """Regularizer value ``R_r(X)``; zero iff ``rank(X) <= r``."""
    X = as_matrix(X)
    x = np.linalg.svd(X, compute_uv=False)
    _check_rank(x, r)
    return _rr_spectrum(x, r)


def ksupport_sq(X, r):
    """Squared spectral r-support norm, ``R_r(X) + ||X||_F^2``."""
    X = as_matrix(X)
    x = np.linalg.svd(X, compute_uv=False)
    _check_rank(x, r)
    return _G_terms(x, r, _s_star(x, r))


def _prox_spectrum(m, r, tau, s):
    """Candidate spectrum for one or many values of ``s`` (last axis = index)."""
    s = np.asarray(s, dtype=float)[..., None]
    x = np.maximum((tau * m - s) / (tau - 1.0), 0.0)
    top = np.broadcast_to(m[:r], x[..., :r].shape)
    x[..., :r] = np.where(top >= s, top, x[..., :r])
    return x


def _prox_balance(m, r, tau, s):
    s = np.asarray(s, dtype=float)
    x = _prox_spectrum(m, r, tau, s)
    return np.sum(np.maximum(s[..., None] - x[..., :r], 0.0), axis=-1) - np.sum(x[..., r:], axis=-1)


def _prox_root(m, r, tau):
    """Root of the nondecreasing piecewise-linear balance function in ``s``.

    The function is linear between the breakpoints ``{0, m_i (i<=r), tau*m_i}``,
    so the root is bracketed by a breakpoint search and then located by
    linear interpolation (exact up to rounding).
    """
    knots = np.unique(np.concatenate([[0.0], m[:r], tau * m]))
    vals = _prox_balance(m, r, tau, knots)
    idx = int(np.argmax(vals >= 0.0))
    if vals[idx] < 0.0:
        return float(knots[-1])
    if idx == 0:
        return float(knots[0])
    lo, hi = knots[idx - 1], knots[idx]
    flo, fhi = vals[idx - 1], vals[idx]
    s = lo + (hi - lo) * (-flo) / (fhi - flo)
    return float(min(max(s, lo), hi))


def prox_objective(x, m, r, tau):
    """``R_r(x) + tau ||x - m||^2`` on aligned spectra."""
    return _rr_spectrum(x, r) + tau * float(np.sum((x - m) ** 2))


def prox_rr(M, r, tau):
    """Global minimizer of ``R_r(X) + tau ||X - M||_F^2`` for ``tau >= 1``.

    For ``tau = 1`` this is the best rank-``r`` approximation of ``M``.
    For ``tau > 1`` the minimizer shares the singular vectors of ``M`` and
    has spectrum ``x_i = m_i`` for ``i <= r`` with ``m_i >= s`` and
    ``x_i = max((tau m_i - s) / (tau - 1), 0)`` otherwise, where ``s`` balances
    ``sum_{i<=r} (s - x_i)^+ = sum_{i>r} x_i``.

    Parameters
    ----------
    M : ndarray
        Input matrix.
    r : int
        Target rank, ``1 <= r < min(M.shape)``.
    tau : float
        Weight of the proximity term, at least 1.

    Returns
    -------
    ProxResult
    """
    M = as_matrix(M, "M")
    if not tau >= 1.0:
        raise InvalidInputError(f"tau must be >= 1, got {tau}")
    f = svd(M)
    m = f.s
    _check_rank(m, r)
    tie = bool(m[r - 1] - m[r] <= 1e-12 * max(m[0], 1.0)) and m[r] > 0

    if tau == 1.0:
        x = m.copy()
        x[r:] = 0.0
        s = float(m[r - 1])
        return ProxResult(f.compose(x), x, s, prox_objective(x, m, r, tau), tie)

    s = _prox_root(m, r, tau)
    x = _prox_spectrum(m, r, tau, s)
    degenerate = False
    if np.any(np.diff(x) > 1e-12 * max(m[0], 1.0)):
        # near-tie broke the ordering: pick the better of two valid candidates
        degenerate = True
        cand = [np.sort(x)[::-1], np.where(np.arange(m.size) < r, m, 0.0)]
        objs = [prox_objective(c, m, r, tau) for c in cand]
        x = cand[int(np.argmin(objs))]
    return ProxResult(f.compose(x), x, s, prox_objective(x, m, r, tau), degenerate)


def subgrad_representative(X, r, tail=None, rtol=RANK_RTOL):
    """A matrix ``Z`` with ``2Z`` in the subdifferential of ``G`` at ``X``.

    Only defined for ``rank(X) <= r``, where ``z_i = x_i`` for ``i <= r`` and
    the remaining entries are any nonincreasing values in ``[0, x_r]``.
    ``tail`` defaults to zeros, which gives ``Z = X``.
    """
    X = as_matrix(X)
    f = svd(X)
    x = f.s
    if spectrum_rank(x, rtol) > r:
        raise UnsupportedOperatorError("subgradient representatives need rank(X) <= r")
    k = x.size
    z = np.zeros(k)
    z[: min(r, k)] = x[: min(r, k)]
    if r < k:
        t = np.zeros(k - r) if tail is None else np.asarray(tail, dtype=float).ravel()
        if t.size != k - r:
            raise InvalidInputError(f"tail must have {k - r} entries, got {t.size}")
        xr = x[r - 1]
        if np.any(t < 0) or np.any(t > xr * (1 + 1e-12)) or np.any(np.diff(t) > 0):
            raise InvalidInputError(f"tail entries must be nonincreasing within [0, {xr}]")
        z[r:] = t
    return f.compose(z)


def certify(z, r, delta_2r):
    """Check the separation condition on the spectrum of ``Z``.

    If ``z_{r+1} < (1 - 2 delta_2r) z_r`` (and ``delta_2r < 1/2``) no other
    stationary point of rank at most ``r`` can exist.
    """
    z = np.asarray(z, dtype=float).ravel()
    if r < 1:
        raise InvalidInputError("rank must be at least 1")
    if delta_2r < 0:
        raise InvalidInputError("delta must be nonnegative")
    z_r = float(z[r - 1]) if z.size >= r else 0.0
    z_r1 = float(z[r]) if z.size > r else 0.0
    margin = (1.0 - 2.0 * delta_2r) * z_r - z_r1
    certified = bool(margin > 0 and delta_2r < 0.5)
    return Certificate(z_r, z_r1, float(delta_2r), certified, float(margin))
