"""Serialization: CSV matrices, JSON matrix containers and problem bundles.

Problem bundle layout (``problem.json``)::

    {
      "format": "fixrank-problem", "version": 1,
      "shape": [m, n], "target_rank": r, "delta": float | null,
      "operator": {"kind": "dense", "file": "operator.csv"}
                | {"kind": "nrsfm", "rotations": [[6 reals], ...], "prior_weight": float | null},
      "observations": [...],
      "ground_truth": {"rows": m, "cols": n, "data": [...]} | null,
      "spec": {...}
    }

Dense operator matrices live in a separate headerless CSV next to the JSON
file. Vectorization of the input is column-stacking throughout.
"""

import json
import os

import numpy as np

from .errors import IngestionError
from .operators import AugmentedOperator, DenseOperator, NrsfmOperator, ProblemInstance

FLOAT_FMT = "%.17g"


def save_matrix_csv(path, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    np.savetxt(path, X, delimiter=",", fmt=FLOAT_FMT)


def load_matrix_csv(path):
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise IngestionError(f"cannot read matrix CSV: {exc}", path) from exc
    if not np.all(np.isfinite(X)):
        raise IngestionError("matrix CSV has non-finite entries", path)
    return X


def matrix_to_json(X):
    X = np.asarray(X, dtype=float)
    return {"rows": int(X.shape[0]), "cols": int(X.shape[1]), "data": [float(v) for v in X.ravel()]}


def matrix_from_json(doc, where="matrix"):
    try:
        rows, cols = int(doc["rows"]), int(doc["cols"])
        data = np.asarray(doc["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"{where}: expected {{rows, cols, data}} ({exc})") from exc
    if data.size != rows * cols:
        raise IngestionError(f"{where}: {data.size} entries for a {rows} x {cols} matrix")
    return data.reshape(rows, cols)


def save_problem(directory, problem, spec=None, operator_file="operator.csv"):
    """Write ``problem.json`` (and the dense operator CSV if needed) to ``directory``."""
    os.makedirs(directory, exist_ok=True)
    A = problem.operator
    b = problem.observations
    if isinstance(A, DenseOperator):
        save_matrix_csv(os.path.join(directory, operator_file), A.matrix)
        op_doc = {"kind": "dense", "file": operator_file}
    else:
        weight = None
        if isinstance(A, AugmentedOperator):
            weight, b = A.weight, b[: A.base.size]
            A = A.base
        if not isinstance(A, NrsfmOperator):
            raise IngestionError(f"cannot serialize operator of type {type(A).__name__}")
        op_doc = {
            "kind": "nrsfm",
            "rotations": [[float(v) for v in R.ravel()] for R in A.rotations],
            "prior_weight": weight,
        }
    doc = {
        "format": "fixrank-problem",
        "version": 1,
        "shape": list(problem.shape),
        "target_rank": problem.target_rank,
        "delta": problem.delta,
        "operator": op_doc,
        "observations": [float(v) for v in b],
        "ground_truth": None if problem.ground_truth is None else matrix_to_json(problem.ground_truth),
        "spec": spec or {},
    }
    path = os.path.join(directory, "problem.json")
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def load_problem(path):
    """Inverse of :func:`save_problem`; ``path`` is the JSON file or its directory."""
    if os.path.isdir(path):
        path = os.path.join(path, "problem.json")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read problem bundle: {exc}", path) from exc
    try:
        m, n = (int(v) for v in doc["shape"])
        op_doc = doc["operator"]
        kind = op_doc["kind"]
        b = np.asarray(doc["observations"], dtype=float)
        r = int(doc["target_rank"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"malformed problem bundle: {exc}", path) from exc
    if kind == "dense":
        A = DenseOperator(load_matrix_csv(os.path.join(os.path.dirname(path), op_doc["file"])), (m, n))
    elif kind == "nrsfm":
        R = np.asarray(op_doc["rotations"], dtype=float).reshape(-1, 2, 3)
        A = NrsfmOperator(R, n // 3)
        if op_doc.get("prior_weight") is not None:
            A = AugmentedOperator(A, float(op_doc["prior_weight"]))
            b = A.augment_observations(b)
    else:
        raise IngestionError(f"unknown operator kind {kind!r}", path)
    gt = doc.get("ground_truth")
    gt = None if gt is None else matrix_from_json(gt, "ground_truth")
    return ProblemInstance(A, b, r, ground_truth=gt, delta=doc.get("delta"))
