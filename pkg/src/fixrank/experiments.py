"""Batch sweeps: noise level vs. data fit on synthetic RIP problems, and NRSfM rank sweeps."""

import csv
import logging
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from .errors import InvalidInputError
from .operators import difference_rows
from .problems import (
    SyntheticSpec,
    gen_gaussian_operator,
    gen_rip_operator,
    gen_synthetic_nrsfm,
    instance_seeds,
    load_nrsfm,
    make_synthetic,
)
from .solvers import SolverConfig, bisect_mu, gist_solve, mu_upper_bound, nuclear_solve
from .spectral import numerical_rank

log = logging.getLogger(__name__)


@dataclass
class NoiseSweepConfig:
    m: int = 20
    n: int = 20
    rank: int = 5
    delta: Optional[float] = 0.2
    p: Optional[int] = None
    sigmas: List[float] = field(default_factory=lambda: list(np.linspace(0.0, 1.0, 30)))
    instances: int = 50
    seed: int = 0
    max_bisect: int = 30

    def __post_init__(self):
        self.sigmas = [float(s) for s in self.sigmas]
        if self.instances < 1:
            raise InvalidInputError("instances must be positive")
        if any(s < 0 for s in self.sigmas):
            raise InvalidInputError("noise levels must be nonnegative")
        # validates dimensions / delta / p consistency
        self.instance_spec(0.0, 0)

    def instance_spec(self, sigma, index):
        return SyntheticSpec(
            m=self.m, n=self.n, p=self.p, rank=self.rank, delta=self.delta, sigma=sigma, seed=self.seed + index
        )


@dataclass
class SweepRecord:
    sigma: float
    instances: int
    fit_rr: float
    fit_nuclear: float
    gt_dist_rr: float
    gt_dist_nuclear: float
    certified_fraction: float
    fit_rr_median: float
    fit_nuclear_median: float
    mu_mean: float


def _operator_for(cfg, index):
    s_op = instance_seeds(cfg.seed + index)[0]
    if cfg.delta is not None:
        return gen_rip_operator(cfg.m, cfg.n, cfg.delta, s_op)
    return gen_gaussian_operator(cfg.p, cfg.m, cfg.n, s_op)


def run_noise_instance(cfg, sigma, index, operator=None, solver=None):
    """Solve one synthetic instance with both methods; returns a dict of metrics."""
    problem = make_synthetic(cfg.instance_spec(sigma, index), operator=operator)
    solver = solver or SolverConfig()
    X, trace = gist_solve(problem, solver)
    mu, Xn = bisect_mu(problem, cfg.rank, 0.0, mu_upper_bound(problem), cfg.max_bisect, solver)
    gt = problem.ground_truth
    cert = trace.certificate
    return {
        "fit_rr": problem.data_fit(X),
        "fit_nuclear": problem.data_fit(Xn),
        "gt_dist_rr": float(np.linalg.norm(X - gt)),
        "gt_dist_nuclear": float(np.linalg.norm(Xn - gt)),
        "certified": None if cert is None else cert.certified,
        "mu": mu,
    }


def noise_sweep(cfg, solver=None, progress=None):
    """Mean/median data fit of both methods per noise level.

    Instance ``i`` uses seed ``cfg.seed + i`` for its operator, ground truth and
    noise pattern at every noise level, so the curves share random numbers.
    """
    operators = {}
    records = []
    for sigma in cfg.sigmas:
        rows = []
        for i in range(cfg.instances):
            if i not in operators:
                operators[i] = _operator_for(cfg, i)
            rows.append(run_noise_instance(cfg, sigma, i, operators[i], solver))
        if progress:
            progress(sigma)
        certs = [r["certified"] for r in rows]
        frac = float("nan") if any(c is None for c in certs) else float(np.mean(certs))
        col = lambda k: np.array([r[k] for r in rows])  # noqa: E731
        records.append(
            SweepRecord(
                sigma=sigma,
                instances=cfg.instances,
                fit_rr=float(col("fit_rr").mean()),
                fit_nuclear=float(col("fit_nuclear").mean()),
                gt_dist_rr=float(col("gt_dist_rr").mean()),
                gt_dist_nuclear=float(col("gt_dist_nuclear").mean()),
                certified_fraction=frac,
                fit_rr_median=float(np.median(col("fit_rr"))),
                fit_nuclear_median=float(np.median(col("fit_nuclear"))),
                mu_mean=float(col("mu").mean()),
            )
        )
        log.info("sigma=%.4g fit_rr=%.4g fit_nuclear=%.4g certified=%.3g", sigma, records[-1].fit_rr,
                 records[-1].fit_nuclear, frac)
    return records


@dataclass
class NrsfmSweepConfig:
    dataset: Optional[str] = None
    frames: int = 20
    points: int = 30
    true_rank: int = 3
    sigma: float = 0.05
    seed: int = 0
    ranks: List[int] = field(default_factory=lambda: list(range(1, 11)))
    mus: List[float] = field(default_factory=lambda: list(np.logspace(0.0, 2.0, 50)))
    prior_weights: List[Optional[float]] = field(default_factory=lambda: [None, 1.0])

    def __post_init__(self):
        self.mus = [float(v) for v in self.mus]
        self.ranks = [int(v) for v in self.ranks]
        if any(v < 0 for v in self.mus):
            raise InvalidInputError("mu values must be nonnegative")
        if any(r < 1 for r in self.ranks):
            raise InvalidInputError("ranks must be positive")

    def load(self):
        if self.dataset:
            return load_nrsfm(self.dataset)
        return gen_synthetic_nrsfm(self.frames, self.points, self.true_rank, self.sigma, self.seed)


@dataclass
class NrsfmRecord:
    method: str
    prior_weight: float
    target_rank: int
    mu: float
    solution_rank: int
    data_fit: float
    prior_term: float
    gt_dist: float


def _nrsfm_record(dataset, method, weight, r, mu, Xs):
    gt = dataset.ground_truth_sharp()
    D = difference_rows(Xs)
    return NrsfmRecord(
        method=method,
        prior_weight=0.0 if weight is None else float(weight),
        target_rank=r,
        mu=mu,
        solution_rank=numerical_rank(Xs),
        data_fit=dataset.data_fit(Xs),
        prior_term=0.0 if weight is None else float(weight) * float(np.sum(D * D)),
        gt_dist=float("nan") if gt is None else float(np.linalg.norm(Xs - gt)),
    )


def nrsfm_sweep(cfg, solver=None, dataset=None):
    """Rank sweep of the fixed-rank relaxation and mu sweep of the nuclear baseline.

    Each is run without and with the temporal difference prior. Nuclear
    solves are warm-started along the mu grid.
    """
    solver = solver or SolverConfig()
    dataset = dataset or cfg.load()
    kmax = min(dataset.frames, 3 * dataset.points)
    out = []
    for w in cfg.prior_weights:
        for r in cfg.ranks:
            if not r < kmax:
                raise InvalidInputError(f"rank {r} must be below {kmax}")
            X, _ = gist_solve(dataset.problem(r, w), solver)
            out.append(_nrsfm_record(dataset, "rr", w, r, float("nan"), X))
        problem = dataset.problem(1, w)
        Xn = None
        for mu in cfg.mus:
            Xn, _ = nuclear_solve(problem, mu, solver, x0=Xn)
            out.append(_nrsfm_record(dataset, "nuclear", w, -1, mu, Xn))
    return out


def write_csv(path, records):
    """Write dataclass records with a header row; floats keep 17 significant digits."""
    if not records:
        raise InvalidInputError("nothing to write")
    names = [f.name for f in fields(records[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for rec in records:
            d = asdict(rec)
            w.writerow([repr(float(d[k])) if isinstance(d[k], float) else d[k] for k in names])
