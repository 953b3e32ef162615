"""Dense matrix helpers: SVD, rank-r truncation and numerical rank."""

from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError

#: Relative threshold below which a singular value counts as zero.
RANK_RTOL = 1e-9


class SVDFactors(NamedTuple):
    """Thin SVD ``X = U @ diag(s) @ V.T`` with ``s`` nonincreasing."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    def compose(self, spectrum=None):
        """Rebuild a matrix from the factors, optionally with a new spectrum."""
        d = self.s if spectrum is None else np.asarray(spectrum, dtype=float)
        return (self.U * d) @ self.V.T


def as_matrix(X, name="X"):
    """Validate ``X`` as a finite, nonempty 2-D float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a nonempty 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return X


def as_spectrum(x, name="x"):
    """Validate a singular-value vector (nonnegative, nonincreasing)."""
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.any(x < 0):
        raise InvalidInputError(f"{name} must be nonnegative")
    if np.any(np.diff(x) > 0):
        raise InvalidInputError(f"{name} must be nonincreasing")
    return x


def svd(X):
    """Thin SVD with the spectrum sorted in nonincreasing order.

    ``U`` is ``rows x k`` and ``V`` is ``cols x k`` with ``k = min(rows, cols)``.
    No sign convention is imposed on the singular vectors.
    """
    X = as_matrix(X)
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    return SVDFactors(U, s, Vt.T)


def singular_values(X):
    return np.linalg.svd(as_matrix(X), compute_uv=False)


def numerical_rank(X, rtol=RANK_RTOL):
    """Number of singular values larger than ``rtol * sigma_1``."""
    s = singular_values(X)
    return spectrum_rank(s, rtol)


def spectrum_rank(s, rtol=RANK_RTOL):
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def truncate_rank(X, r):
    """Best rank-``r`` approximation of ``X`` in Frobenius norm (Eckart-Young)."""
    X = as_matrix(X)
    k = min(X.shape)
    if not 0 <= r <= k:
        raise InvalidInputError(f"rank {r} outside [0, {k}]")
    if r == k:
        return X.copy()
    f = svd(X)
    return (f.U[:, :r] * f.s[:r]) @ f.V[:, :r].T


def frob(X):
    return float(np.linalg.norm(X))
