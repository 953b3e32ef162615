"""Linear measurement operators mapping matrices to vectors.

Three variants are provided:

* :class:`DenseOperator` -- an explicit ``p x (m*n)`` matrix acting on the
  column-stacked input (``vec(X) = X.ravel(order="F")``).
* :class:`NrsfmOperator` -- orthographic projection ``X_sharp -> R @ unsharp(X_sharp)``
  for non-rigid structure from motion.
* :class:`AugmentedOperator` -- a base operator stacked with a weighted
  first-difference penalty over the rows of the input, so that
  ``||A_aug X - [b; 0]||^2 = ||A X - b||^2 + w ||D X||^2``.
"""

import numpy as np

from .errors import InvalidInputError, UnsupportedOperatorError


class MeasurementOperator:
    """Common interface. Subclasses define ``shape`` (input) and ``size`` (output)."""

    shape = (0, 0)
    size = 0

    def apply(self, X):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError

    def normal(self, X):
        """``A* A X``."""
        return self.adjoint(self.apply(X))

    def _check_input(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != self.shape:
            raise InvalidInputError(f"operator expects input of shape {self.shape}, got {X.shape}")
        return X

    def _check_output(self, y):
        y = np.asarray(y, dtype=float).ravel()
        if y.size != self.size:
            raise InvalidInputError(f"operator expects vector of length {self.size}, got {y.size}")
        return y

    def norm(self, iters=200, seed=0):
        """Spectral norm estimated by power iteration on ``A* A``."""
        rng = np.random.default_rng(seed)
        X = rng.standard_normal(self.shape)
        X /= np.linalg.norm(X)
        lam = 0.0
        for _ in range(iters):
            Y = self.normal(X)
            lam_new = float(np.linalg.norm(Y))
            if lam_new == 0.0:
                return 0.0
            X = Y / lam_new
            if abs(lam_new - lam) <= 1e-12 * lam_new:
                break
            lam = lam_new
        return float(np.sqrt(lam_new))


class DenseOperator(MeasurementOperator):
    """Explicit matrix acting on column-stacked ``m x n`` inputs."""

    def __init__(self, matrix, shape):
        matrix = np.asarray(matrix, dtype=float)
        m, n = (int(v) for v in shape)
        if matrix.ndim != 2 or matrix.shape[1] != m * n:
            raise InvalidInputError(
                f"dense operator needs {m * n} columns for input shape {(m, n)}, got {matrix.shape}"
            )
        if not np.all(np.isfinite(matrix)):
            raise InvalidInputError("operator matrix has non-finite entries")
        self.matrix = matrix
        self.shape = (m, n)
        self.size = matrix.shape[0]
        self._norm = None

    def apply(self, X):
        X = self._check_input(X)
        return self.matrix @ X.ravel(order="F")

    def adjoint(self, y):
        y = self._check_output(y)
        return (self.matrix.T @ y).reshape(self.shape, order="F")

    def norm(self, iters=None, seed=None):
        if self._norm is None:
            self._norm = float(np.linalg.norm(self.matrix, 2))
        return self._norm


def sharp(X):
    """Reshape a ``3F x m`` structure matrix to the ``F x 3m`` form.

    Row ``i`` of the result is ``[X_i, Y_i, Z_i]``, the x-, y- and
    z-coordinate rows of frame ``i`` laid side by side.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] % 3:
        raise InvalidInputError(f"expected 3F x m matrix, got shape {X.shape}")
    F, m = X.shape[0] // 3, X.shape[1]
    return X.reshape(F, 3 * m)


def unsharp(Xs):
    """Inverse of :func:`sharp`."""
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim != 2 or Xs.shape[1] % 3:
        raise InvalidInputError(f"expected F x 3m matrix, got shape {Xs.shape}")
    F, m = Xs.shape[0], Xs.shape[1] // 3
    return Xs.reshape(3 * F, m)


class NrsfmOperator(MeasurementOperator):
    """Orthographic projection of per-frame 3-D point sets.

    The input is the ``F x 3m`` matrix ``X_sharp``; the output is the
    column-stacked ``2F x m`` image measurement matrix ``R @ unsharp(X_sharp)``
    where ``R`` is block diagonal with the ``2 x 3`` camera blocks.
    """

    def __init__(self, rotations, points):
        R = np.asarray(rotations, dtype=float)
        if R.ndim != 3 or R.shape[1:] != (2, 3):
            raise InvalidInputError(f"rotations must have shape (F, 2, 3), got {R.shape}")
        self.rotations = R
        self.frames = R.shape[0]
        self.points = int(points)
        self.shape = (self.frames, 3 * self.points)
        self.size = 2 * self.frames * self.points

    def project(self, Xs):
        """Image matrix ``R X`` (``2F x m``) for a structure in sharp form."""
        Xs = self._check_input(Xs)
        blocks = Xs.reshape(self.frames, 3, self.points)
        return np.einsum("fij,fjm->fim", self.rotations, blocks).reshape(2 * self.frames, self.points)

    def apply(self, X):
        return self.project(X).ravel(order="F")

    def adjoint(self, y):
        y = self._check_output(y)
        M = y.reshape(2 * self.frames, self.points, order="F").reshape(self.frames, 2, self.points)
        blocks = np.einsum("fji,fjm->fim", self.rotations, M)
        return blocks.reshape(self.frames, 3 * self.points)

    def norm(self, iters=None, seed=None):
        # each block has orthonormal rows, so R R^T = I
        return 1.0


def difference_rows(X):
    """First-order temporal differences ``(D X)_i = X_{i+1} - X_i``."""
    X = np.asarray(X, dtype=float)
    return X[1:] - X[:-1]


def difference_rows_adjoint(Y, rows):
    """Adjoint of :func:`difference_rows` for an input with ``rows`` rows."""
    Y = np.asarray(Y, dtype=float)
    out = np.zeros((rows, Y.shape[1]))
    out[1:] += Y
    out[:-1] -= Y
    return out


class AugmentedOperator(MeasurementOperator):
    """Base operator stacked with ``sqrt(weight) * vec(D X)``.

    Pair it with :meth:`augment_observations` so that the squared residual
    equals the base data term plus ``weight * ||D X||_F^2``.
    """

    def __init__(self, base, weight=1.0):
        if weight < 0:
            raise InvalidInputError("difference weight must be nonnegative")
        if base.shape[0] < 2:
            raise InvalidInputError("difference prior needs at least two rows")
        self.base = base
        self.weight = float(weight)
        self.shape = base.shape
        self._ndiff = (base.shape[0] - 1) * base.shape[1]
        self.size = base.size + self._ndiff

    def apply(self, X):
        X = self._check_input(X)
        d = np.sqrt(self.weight) * difference_rows(X).ravel(order="F")
        return np.concatenate([self.base.apply(X), d])

    def adjoint(self, y):
        y = self._check_output(y)
        yb, yd = y[: self.base.size], y[self.base.size:]
        Yd = yd.reshape(self.shape[0] - 1, self.shape[1], order="F")
        return self.base.adjoint(yb) + np.sqrt(self.weight) * difference_rows_adjoint(Yd, self.shape[0])

    def augment_observations(self, b):
        b = np.asarray(b, dtype=float).ravel()
        if b.size != self.base.size:
            raise InvalidInputError(f"expected base observations of length {self.base.size}, got {b.size}")
        return np.concatenate([b, np.zeros(self._ndiff)])


def apply(A, X):
    return A.apply(X)


def adjoint(A, y):
    return A.adjoint(y)


def exact_delta_square(A):
    """Exact two-sided RIP constant of a square dense operator.

    When ``p = m*n`` the bound ``(1-d)||X||^2 <= ||A X||^2 <= (1+d)||X||^2``
    holds for every ``X`` regardless of rank, with
    ``d = max(1 - sigma_min^2, sigma_max^2 - 1)``.
    """
    if not isinstance(A, DenseOperator):
        raise UnsupportedOperatorError("exact delta is only available for dense operators")
    p, q = A.matrix.shape
    if p != q:
        raise UnsupportedOperatorError(f"exact delta needs a square representation, got {p} x {q}")
    s = np.linalg.svd(A.matrix, compute_uv=False)
    if s[-1] <= 0:
        raise UnsupportedOperatorError("operator is rank deficient")
    return float(max(1.0 - s[-1] ** 2, s[0] ** 2 - 1.0))


class ProblemInstance:
    """Data of ``min_X R_r(X) + ||A X - b||^2``.

    ``delta`` is an RIP constant valid for rank ``2r`` differences when known
    (the exact any-rank constant for square dense operators).
    """

    def __init__(self, operator, observations, target_rank, ground_truth=None, delta=None):
        b = np.asarray(observations, dtype=float).ravel()
        if b.size != operator.size:
            raise InvalidInputError(
                f"observation length {b.size} does not match operator output length {operator.size}"
            )
        if not np.all(np.isfinite(b)):
            raise InvalidInputError("observations have non-finite entries")
        r = int(target_rank)
        if not 1 <= r <= min(operator.shape):
            raise InvalidInputError(f"target rank {r} outside [1, {min(operator.shape)}]")
        if ground_truth is not None:
            ground_truth = np.asarray(ground_truth, dtype=float)
            if ground_truth.shape != operator.shape:
                raise InvalidInputError(f"ground truth shape {ground_truth.shape} != {operator.shape}")
        if delta is not None and not 0.0 <= delta:
            raise InvalidInputError(f"delta must be nonnegative, got {delta}")
        self.operator = operator
        self.observations = b
        self.target_rank = r
        self.ground_truth = ground_truth
        self.delta = None if delta is None else float(delta)

    @property
    def shape(self):
        return self.operator.shape

    def residual(self, X):
        return self.operator.apply(X) - self.observations

    def data_fit(self, X):
        """``||A X - b||``."""
        return float(np.linalg.norm(self.residual(X)))
