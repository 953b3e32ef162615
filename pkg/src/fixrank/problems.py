"""Problem generators: RIP-controlled synthetic instances and NRSfM scenes."""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IngestionError, InvalidInputError
from .operators import (
    AugmentedOperator,
    DenseOperator,
    NrsfmOperator,
    ProblemInstance,
    exact_delta_square,
    sharp,
    unsharp,
)


def _rng(seed):
    return np.random.default_rng(seed)


def gen_rip_operator(m, n, delta, seed):
    """Square dense operator whose exact RIP constant is ``delta``.

    A Gaussian ``mn x mn`` matrix has its singular values replaced by values
    uniformly spaced on ``[sqrt(1 - delta), sqrt(1 + delta)]``.
    """
    if not 0.0 <= delta < 1.0:
        raise InvalidInputError(f"delta must lie in [0, 1), got {delta}")
    p = m * n
    G = _rng(seed).standard_normal((p, p))
    U, _, Vt = np.linalg.svd(G)
    s = np.linspace(np.sqrt(1.0 + delta), np.sqrt(1.0 - delta), p)
    return DenseOperator((U * s) @ Vt, (m, n))


def gen_gaussian_operator(p, m, n, seed):
    """``p x mn`` operator with i.i.d. ``N(0, 1/p)`` entries."""
    if p < 1:
        raise InvalidInputError(f"measurement count must be positive, got {p}")
    return DenseOperator(_rng(seed).standard_normal((p, m * n)) / np.sqrt(p), (m, n))


def gen_lowrank(m, n, r, seed):
    """``U V^T`` with ``U`` (m x r) and ``V`` (n x r) standard normal."""
    if not 0 <= r <= min(m, n):
        raise InvalidInputError(f"rank {r} outside [0, {min(m, n)}]")
    rng = _rng(seed)
    U = rng.standard_normal((m, r))
    V = rng.standard_normal((n, r))
    return U @ V.T


def add_noise(b, sigma, seed):
    """``b + eps`` with ``eps ~ N(0, sigma^2)`` i.i.d."""
    if sigma < 0:
        raise InvalidInputError(f"sigma must be nonnegative, got {sigma}")
    b = np.asarray(b, dtype=float)
    if sigma == 0:
        return b.copy()
    return b + sigma * _rng(seed).standard_normal(b.shape)


@dataclass
class SyntheticSpec:
    m: int = 20
    n: int = 20
    p: Optional[int] = None
    rank: int = 5
    delta: Optional[float] = 0.2
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidInputError("matrix dimensions must be positive")
        if not 1 <= self.rank <= min(self.m, self.n):
            raise InvalidInputError(f"rank {self.rank} outside [1, {min(self.m, self.n)}]")
        if self.delta is not None:
            if self.p is None:
                self.p = self.m * self.n
            if self.p != self.m * self.n:
                raise InvalidInputError("a target delta requires p = m * n")
        elif self.p is None:
            raise InvalidInputError("either delta or p must be given")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")


def instance_seeds(seed):
    """Independent integer seeds for the operator, the signal and the noise."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1)[0]) for c in ss.spawn(3)]


def make_synthetic(spec, operator=None):
    """Build a :class:`ProblemInstance` from a :class:`SyntheticSpec`.

    ``operator`` may be passed to reuse one measurement operator across
    several instances; otherwise it is drawn from ``spec.seed``.
    """
    s_op, s_x, s_noise = instance_seeds(spec.seed)
    if operator is None:
        if spec.delta is not None:
            operator = gen_rip_operator(spec.m, spec.n, spec.delta, s_op)
        else:
            operator = gen_gaussian_operator(spec.p, spec.m, spec.n, s_op)
    delta = None
    if spec.delta is not None:
        delta = exact_delta_square(operator)
    X = gen_lowrank(spec.m, spec.n, spec.rank, s_x)
    b = add_noise(operator.apply(X), spec.sigma, s_noise)
    return ProblemInstance(operator, b, spec.rank, ground_truth=X, delta=delta)


# --- non-rigid structure from motion -------------------------------------------------


def random_rotations(F, seed):
    """``F`` camera blocks with orthonormal rows from two Gaussian 3-vectors each."""
    rng = _rng(seed)
    R = np.empty((F, 2, 3))
    for i in range(F):
        Q, T = np.linalg.qr(rng.standard_normal((3, 2)))
        R[i] = (Q * np.sign(np.diag(T))).T
    return R


def camera_normals(rotations):
    """Unit vectors ``N_i = row1 x row2`` with ``R_i N_i = 0``."""
    R = np.asarray(rotations, dtype=float)
    N = np.cross(R[:, 0, :], R[:, 1, :])
    return N / np.linalg.norm(N, axis=1, keepdims=True)


def nullspace_element(rotations, C):
    """Sharp-form matrix ``N(C)`` annihilated by the projection.

    Row ``i`` is ``[n_1i C_i, n_2i C_i, n_3i C_i]`` where ``N_i`` is the
    camera normal of frame ``i`` and ``C_i`` the ``i``-th row of ``C``.
    """
    N = camera_normals(rotations)
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != N.shape[0]:
        raise InvalidInputError(f"C must have {N.shape[0]} rows, got shape {C.shape}")
    return (N[:, :, None] * C[:, None, :]).reshape(C.shape[0], 3 * C.shape[1])


def derivative_operator(F):
    """``(F-1) x F`` first-order difference matrix."""
    if F < 2:
        raise InvalidInputError("difference operator needs F >= 2")
    return np.eye(F - 1, F, 1) - np.eye(F - 1, F)


@dataclass
class NrsfmDataset:
    rotations: np.ndarray
    observations: np.ndarray
    ground_truth: Optional[np.ndarray] = None

    def __post_init__(self):
        self.rotations = np.asarray(self.rotations, dtype=float)
        self.observations = np.asarray(self.observations, dtype=float)
        F = self.rotations.shape[0]
        if self.rotations.shape != (F, 2, 3):
            raise InvalidInputError(f"rotations must have shape (F, 2, 3), got {self.rotations.shape}")
        if self.observations.ndim != 2 or self.observations.shape[0] != 2 * F:
            raise InvalidInputError(f"observations must be 2F x m with F={F}")
        if self.ground_truth is not None:
            self.ground_truth = np.asarray(self.ground_truth, dtype=float)
            if self.ground_truth.shape != (3 * F, self.points):
                raise InvalidInputError(f"ground truth must be {3 * F} x {self.points}")

    @property
    def frames(self):
        return self.rotations.shape[0]

    @property
    def points(self):
        return self.observations.shape[1]

    def operator(self):
        return NrsfmOperator(self.rotations, self.points)

    def ground_truth_sharp(self):
        return None if self.ground_truth is None else sharp(self.ground_truth)

    def problem(self, rank, prior_weight=None):
        """Problem over ``X_sharp``; with ``prior_weight`` the difference prior is stacked in."""
        A = self.operator()
        b = self.observations.ravel(order="F")
        if prior_weight is not None:
            A = AugmentedOperator(A, prior_weight)
            b = A.augment_observations(b)
        return ProblemInstance(A, b, rank, ground_truth=self.ground_truth_sharp())

    def data_fit(self, Xs):
        """``||R X - M||_F`` for a structure in sharp form."""
        return float(np.linalg.norm(self.operator().project(Xs) - self.observations))


def smooth_coefficients(F, r, rng, bandwidth=None):
    """``F x r`` shape coefficients that vary smoothly over time.

    Gaussian white noise is smoothed with a Gaussian kernel along time and
    rescaled to unit variance per column.
    """
    bandwidth = bandwidth or max(F / 5.0, 1.0)
    t = np.arange(F)
    K = np.exp(-0.5 * ((t[:, None] - t[None, :]) / bandwidth) ** 2)
    C = K @ rng.standard_normal((F, r))
    return C / C.std(axis=0, keepdims=True)


def gen_synthetic_nrsfm(F, m, r, sigma, seed, smooth=True):
    """Random NRSfM scene ``X_sharp = C B`` observed by random orthographic cameras.

    With ``smooth=True`` the coefficients ``C`` follow smooth trajectories in
    time (as motion capture does); otherwise they are i.i.d. Gaussian.
    """
    if not 1 <= r <= min(F, 3 * m):
        raise InvalidInputError(f"rank {r} outside [1, {min(F, 3 * m)}]")
    if sigma < 0:
        raise InvalidInputError("sigma must be nonnegative")
    ss = np.random.SeedSequence(int(seed)).spawn(3)
    rng_cam, rng_shape, rng_noise = (np.random.default_rng(s) for s in ss)
    R = random_rotations(F, rng_cam)
    C = smooth_coefficients(F, r, rng_shape) if smooth else rng_shape.standard_normal((F, r))
    B = rng_shape.standard_normal((r, 3 * m))
    Xs = C @ B
    X = unsharp(Xs)
    M = NrsfmOperator(R, m).project(Xs)
    if sigma > 0:
        M = M + sigma * rng_noise.standard_normal(M.shape)
    return NrsfmDataset(R, M, X)


def save_nrsfm(path, dataset):
    doc = {
        "F": dataset.frames,
        "m": dataset.points,
        "rotations": [[float(v) for v in R.ravel()] for R in dataset.rotations],
        "observations": [float(v) for v in dataset.observations.ravel()],
    }
    if dataset.ground_truth is not None:
        doc["ground_truth"] = [float(v) for v in dataset.ground_truth.ravel()]
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_nrsfm(path, tol=1e-6):
    """Read a dataset and validate camera orthonormality frame by frame."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read NRSfM file: {exc}", path) from exc
    try:
        F, m = int(doc["F"]), int(doc["m"])
        rots = doc["rotations"]
        obs = np.asarray(doc["observations"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"malformed NRSfM file: missing or invalid field {exc}", path) from exc
    if len(rots) != F:
        raise IngestionError(f"expected {F} rotation blocks, found {len(rots)}", path)
    R = np.empty((F, 2, 3))
    for i, blk in enumerate(rots):
        blk = np.asarray(blk, dtype=float)
        if blk.size != 6:
            raise IngestionError(f"rotation block at frame {i} must have 6 entries", path)
        R[i] = blk.reshape(2, 3)
        if np.max(np.abs(R[i] @ R[i].T - np.eye(2))) > tol:
            raise IngestionError(f"rotation at frame {i} does not have orthonormal rows", path)
    if obs.size != 2 * F * m:
        raise IngestionError(f"observations must have {2 * F * m} entries, found {obs.size}", path)
    gt = doc.get("ground_truth")
    if gt is not None:
        gt = np.asarray(gt, dtype=float)
        if gt.size != 3 * F * m:
            raise IngestionError(f"ground_truth must have {3 * F * m} entries, found {gt.size}", path)
        gt = gt.reshape(3 * F, m)
    return NrsfmDataset(R, obs.reshape(2 * F, m), gt)
