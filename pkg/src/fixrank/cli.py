"""Command-line front end.

    fixrank gen          --config instance.json --out DIR
    fixrank solve        --problem DIR [--method rr|nuclear --mu MU] --out DIR
    fixrank certify      --problem DIR --solution X.csv
    fixrank noise-sweep  [--config sweep.json] --out DIR
    fixrank nrsfm-sweep  [--config sweep.json] --out DIR

Every subcommand accepts ``--seed``, ``--config`` and ``--out``. Results are
printed as JSON on stdout; failures print ``{"error": ..., "message": ...}``
on stderr and exit with a nonzero status.
"""

import argparse
import json
import logging
import os
import sys

import jsonschema
import numpy as np

from . import io
from .errors import FixrankError, InvalidInputError, UnsupportedOperatorError
from .experiments import NoiseSweepConfig, NrsfmSweepConfig, noise_sweep, nrsfm_sweep, write_csv
from .problems import SyntheticSpec, gen_synthetic_nrsfm, make_synthetic
from .solvers import SolverConfig, gist_solve, is_stationary, nuclear_solve
from .spectral import numerical_rank

_num = {"type": "number"}
_int = {"type": "integer", "minimum": 1}
_opt_num = {"type": ["number", "null"]}

SYNTHETIC_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "synthetic"},
        "m": _int, "n": _int, "p": {"type": ["integer", "null"], "minimum": 1}, "rank": _int,
        "delta": {"type": ["number", "null"], "minimum": 0, "exclusiveMaximum": 1},
        "sigma": {"type": "number", "minimum": 0}, "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}

NRSFM_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "nrsfm"},
        "frames": _int, "points": _int, "true_rank": _int, "target_rank": _int,
        "sigma": {"type": "number", "minimum": 0}, "seed": {"type": "integer"},
        "prior_weight": {"type": ["number", "null"], "minimum": 0},
        "smooth": {"type": "boolean"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SOLVER_SCHEMA = {
    "type": "object",
    "properties": {
        "tau0": {"type": "number", "minimum": 1}, "decrease_divisor": _num, "increase_factor": _num,
        "max_iters": _int, "step_tol": _num, "stall_iters": _int, "rank_rtol": _num,
    },
    "additionalProperties": False,
}

NOISE_SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "m": _int, "n": _int, "rank": _int, "p": {"type": ["integer", "null"], "minimum": 1},
        "delta": {"type": ["number", "null"], "minimum": 0, "exclusiveMaximum": 1},
        "sigmas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "instances": _int, "seed": {"type": "integer"}, "max_bisect": _int,
        "solver": SOLVER_SCHEMA,
    },
    "additionalProperties": False,
}

NRSFM_SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "dataset": {"type": ["string", "null"]},
        "frames": _int, "points": _int, "true_rank": _int,
        "sigma": {"type": "number", "minimum": 0}, "seed": {"type": "integer"},
        "ranks": {"type": "array", "items": _int, "minItems": 1},
        "mus": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "prior_weights": {"type": "array", "items": _opt_num, "minItems": 1},
        "solver": SOLVER_SCHEMA,
    },
    "additionalProperties": False,
}


class ConfigError(InvalidInputError):
    def __init__(self, message, field_path="$"):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


def _validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise ConfigError(exc.message, path) from None
    return doc


def _read_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _solver_config(doc):
    return SolverConfig(**_validate(doc or {}, SOLVER_SCHEMA))


def _out_dir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_gen(args):
    doc = _read_config(args.config)
    kind = doc.get("kind", "synthetic")
    if args.seed is not None:
        doc["seed"] = args.seed
    out = _out_dir(args)
    if kind == "nrsfm":
        _validate(doc, NRSFM_SCHEMA)
        ds = gen_synthetic_nrsfm(
            doc.get("frames", 20), doc.get("points", 30), doc.get("true_rank", 3),
            doc.get("sigma", 0.0), doc.get("seed", 0), smooth=doc.get("smooth", True),
        )
        problem = ds.problem(doc.get("target_rank", doc.get("true_rank", 3)), doc.get("prior_weight"))
    else:
        doc.setdefault("kind", "synthetic")
        _validate(doc, SYNTHETIC_SCHEMA)
        spec = SyntheticSpec(**{k: v for k, v in doc.items() if k != "kind"})
        problem = make_synthetic(spec)
    path = io.save_problem(out, problem, spec=doc)
    return {"problem": path, "shape": list(problem.shape), "target_rank": problem.target_rank,
            "delta": problem.delta}


def cmd_solve(args):
    problem = io.load_problem(args.problem)
    solver = _solver_config(_read_config(args.config))
    out = _out_dir(args)
    if args.method == "nuclear":
        if args.mu is None:
            raise InvalidInputError("--mu is required for the nuclear method")
        X, trace = nuclear_solve(problem, args.mu, solver)
    else:
        X, trace = gist_solve(problem, solver)
    io.save_matrix_csv(os.path.join(out, "solution.csv"), X)
    trace.write_jsonl(os.path.join(out, "trace.jsonl"))
    summary = {
        "method": args.method,
        "iterations": trace.iterations,
        "stop_reason": trace.stop_reason,
        "objective": trace.objectives[-1],
        "data_fit": problem.data_fit(X),
        "rank": numerical_rank(X),
        "final_stationarity": trace.final_stationarity,
        "operator_norm": problem.operator.norm(),
        "certificate": None if trace.certificate is None else trace.certificate.to_dict(),
    }
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def certify_solution(problem, X, tol=1e-6):
    """Stationarity plus separation certificate for a candidate solution."""
    X = np.asarray(X, dtype=float)
    if X.shape != problem.shape:
        raise InvalidInputError(f"solution has shape {X.shape}, expected {problem.shape}")
    rank = numerical_rank(X)
    if rank > problem.target_rank:
        raise UnsupportedOperatorError(f"solution rank {rank} exceeds target rank {problem.target_rank}")
    flag, _, cert = is_stationary(X, problem, tol)
    if cert is None:
        verdict = "unknown"
    else:
        verdict = "certified" if (flag and cert.certified) else "not-certified"
    return {
        "verdict": verdict,
        "stationary": bool(flag),
        "certificate": None if cert is None else cert.to_dict(),
        "data_fit": problem.data_fit(X),
    }


def cmd_certify(args):
    problem = io.load_problem(args.problem)
    X = io.load_matrix_csv(args.solution)
    result = certify_solution(problem, X, args.tol)
    if args.out:
        with open(os.path.join(_out_dir(args), "certificate.json"), "w") as fh:
            json.dump(result, fh, indent=2)
    return result


def cmd_noise_sweep(args):
    doc = _validate(_read_config(args.config), NOISE_SWEEP_SCHEMA)
    solver = _solver_config(doc.pop("solver", None))
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = NoiseSweepConfig(**doc)
    records = noise_sweep(cfg, solver)
    path = os.path.join(_out_dir(args), "noise_sweep.csv")
    write_csv(path, records)
    return {"csv": path, "rows": len(records)}


def cmd_nrsfm_sweep(args):
    doc = _validate(_read_config(args.config), NRSFM_SWEEP_SCHEMA)
    solver = _solver_config(doc.pop("solver", None))
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = NrsfmSweepConfig(**doc)
    records = nrsfm_sweep(cfg, solver)
    path = os.path.join(_out_dir(args), "nrsfm_sweep.csv")
    write_csv(path, records)
    return {"csv": path, "rows": len(records)}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the seed in the config")
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fixrank", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("gen", parents=[common], help="generate a problem bundle").set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", parents=[common], help="solve a problem bundle")
    s.add_argument("--problem", required=True)
    s.add_argument("--method", choices=["rr", "nuclear"], default="rr")
    s.add_argument("--mu", type=float, default=None)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", parents=[common], help="certify a solution")
    c.add_argument("--problem", required=True)
    c.add_argument("--solution", required=True)
    c.add_argument("--tol", type=float, default=1e-6)
    c.set_defaults(func=cmd_certify)

    sub.add_parser("noise-sweep", parents=[common], help="noise level vs. data fit").set_defaults(
        func=cmd_noise_sweep)
    sub.add_parser("nrsfm-sweep", parents=[common], help="NRSfM rank / mu sweep").set_defaults(
        func=cmd_nrsfm_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        result = args.func(args)
    except FixrankError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, ConfigError):
            err["field"] = exc.field_path
        print(json.dumps(err), file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
