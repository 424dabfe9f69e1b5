"""Command-line front end.

Usage::

    crcep extend-periodic --cov c.json --b b.json --N 32 -o out.json
    crcep extend-line --cov c.json --b b.json -o out.json
    crcep extend-vector --cov C.json --b b.json --N 25 -o out.json
    crcep smooth --state ss.json --b b.json --N 25 --seed 1 -o out.json --csv traj.csv
    crcep simulate --model out.json --seed 7 --csv y.csv --lags-out lags.json --n 1

Exit codes: 0 success, 1 usage, 2 bad data, 3 infeasible at this N,
4 no convergence. On failure a JSON error document is written to the
``-o`` path (or stdout). ``CRCEP_LOG`` sets the log level.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import (
    ConvergenceError,
    CrcepError,
    DimensionError,
    FactorizationError,
)
from .line import solve_line
from .periodic import PeriodicArmaModel, solve
from .simulate import sample_lags, simulate_periodic, simulate_state_space
from .smoother import SmoothingProblem, StateSpaceModel, direct_smooth_oracle, smooth
from .solver import SolverConfig
from .vector import VectorPeriodicArmaModel, solve_vec

logger = logging.getLogger("crcep")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4
COMMANDS = ("extend-line", "extend-periodic", "extend-vector", "smooth", "simulate")


class UsageError(Exception):
    """Bad command line (unknown flag, missing option or file)."""


class DataError(Exception):
    """Malformed or inconsistent input document."""


# ---------------------------------------------------------------------------
# serialization


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits, NaN as null."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_fmt(v) for v in obj) + "]"
        items = [inner + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _fmt(obj)


def _read_json(path: Path, flag: str) -> dict:
    if not path.is_file():
        raise UsageError(f"{flag}: file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{flag}: {path} is not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise DataError(f"{flag}: {path} must hold a JSON object")
    return doc


def _require(doc: dict, key: str, flag: str):
    if key not in doc:
        raise DataError(f"{flag}: missing key {key!r}")
    return doc[key]


def load_cov(path: Path, flag: str = "--cov") -> np.ndarray:
    """Covariance document ``{"m": m, "n": n, "lags": [...]}``.

    Returns shape ``(n+1,)`` when ``m = 1`` and the lags are plain numbers,
    ``(n+1, m, m)`` otherwise.
    """
    doc = _read_json(path, flag)
    m, n = int(_require(doc, "m", flag)), int(_require(doc, "n", flag))
    try:
        lags = np.asarray(_require(doc, "lags", flag), dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"{flag}: lags must be numeric") from None
    if lags.shape[0] != n + 1:
        raise DataError(f"{flag}: expected n+1 = {n + 1} lags, got {lags.shape[0]}")
    if lags.ndim == 1 and m == 1:
        return lags
    if lags.shape[1:] != (m, m):
        raise DataError(f"{flag}: lags must be {m} x {m} blocks, got shape {lags.shape[1:]}")
    return lags


def load_poly(path: Path, flag: str = "--b") -> np.ndarray:
    doc = _read_json(path, flag)
    try:
        return np.atleast_1d(np.asarray(_require(doc, "coeffs", flag), dtype=float))
    except (TypeError, ValueError):
        raise DataError(f"{flag}: coeffs must be numeric") from None


def load_state(path: Path, flag: str = "--state") -> StateSpaceModel:
    doc = _read_json(path, flag)
    parts = {k: _require(doc, k, flag) for k in ("A", "C", "W", "R")}
    return StateSpaceModel(**parts)


def load_model(path: Path, flag: str = "--model"):
    doc = _read_json(path, flag)
    d = doc.get("model", doc)
    if "A" in d:
        return VectorPeriodicArmaModel(d["A"], d["b"], d["D"], int(d["N"]))
    if "a" in d:
        return PeriodicArmaModel(d["a"], d["b"], d["sigma2"], int(d["N"]))
    raise DataError(f"{flag}: document holds neither a scalar nor a vector periodic model")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, (int, np.integer)) else int(v) for v in row])


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(flag):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be >= 1")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crcep", description="Circulant rational covariance extension tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_flags(p):
        p.add_argument("--tol", type=float, default=1e-10, help="step-length threshold")
        p.add_argument("--max-iter", type=_positive_int("--max-iter"), default=500)
        p.add_argument("--no-damping", action="store_true", help="disable backtracking")
        p.add_argument("-o", "--output", type=Path, help="output JSON (default stdout)")

    p = sub.add_parser("extend-periodic", help="scalar periodic extension")
    p.add_argument("--cov", type=Path, required=True)
    p.add_argument("--b", type=Path, help="numerator polynomial (default: maximum entropy)")
    p.add_argument("--N", type=_positive_int("--N"), required=True)
    solver_flags(p)

    p = sub.add_parser("extend-line", help="scalar extension on the integer line")
    p.add_argument("--cov", type=Path, required=True)
    p.add_argument("--b", type=Path)
    solver_flags(p)

    p = sub.add_parser("extend-vector", help="block periodic extension")
    p.add_argument("--cov", type=Path, required=True)
    p.add_argument("--b", type=Path)
    p.add_argument("--N", type=_positive_int("--N"), required=True)
    solver_flags(p)

    p = sub.add_parser("smooth", help="fit a periodic prior to a state model and smooth")
    p.add_argument("--state", type=Path, required=True)
    p.add_argument("--b", type=Path, required=True)
    p.add_argument("--N", type=_positive_int("--N"), required=True)
    p.add_argument("--obs", type=Path, help="observation CSV (header row, 2N rows of p values)")
    p.add_argument("--seed", type=int, default=0, help="seed for simulated observations")
    p.add_argument("--csv", type=Path, help="trajectory CSV")
    solver_flags(p)

    p = sub.add_parser("simulate", help="draw one period from a fitted periodic model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--N", type=_positive_int("--N"), help="override the model's half-period")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", type=Path, help="trajectory CSV")
    p.add_argument("--lags-out", type=Path, help="write sample covariances here")
    p.add_argument("--n", type=int, default=None, help="number of sample lags (default: model n)")
    p.add_argument("-o", "--output", type=Path, help="output JSON (default stdout)")
    return parser


@dataclass
class JobSpec:
    command: str
    inputs: dict
    output: Path | None
    config: SolverConfig | None = None
    N: int | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)


def parse_and_validate(argv) -> JobSpec:
    """Parse ``argv`` into a :class:`JobSpec`; raises :class:`UsageError`."""
    args = build_parser().parse_args(argv)
    inputs = {k: getattr(args, k) for k in ("cov", "b", "state", "obs", "model")
              if getattr(args, k, None) is not None}
    for k, path in inputs.items():
        if not path.is_file():
            raise UsageError(f"--{k}: file not found: {path}")
    config = None
    if hasattr(args, "tol"):
        try:
            config = SolverConfig(delta=args.tol, max_iterations=args.max_iter,
                                  damping=not args.no_damping)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    extra = {k: getattr(args, k) for k in ("csv", "lags_out", "n") if getattr(args, k, None) is not None}
    return JobSpec(args.command, inputs, args.output, config, getattr(args, "N", None),
                   getattr(args, "seed", None), extra)


# ---------------------------------------------------------------------------
# execution


def _numerator(job: JobSpec, n: int) -> np.ndarray:
    if "b" in job.inputs:
        b = load_poly(job.inputs["b"])
        if b.shape[0] != n + 1:
            raise DataError(f"--b: numerator has degree {b.shape[0] - 1}, data has n = {n}")
        return b
    b = np.zeros(n + 1)
    b[0] = 1.0
    return b


def _check_N(N, n):
    if n >= N:
        raise DataError(f"n < N required (n = {n}, N = {N})")


def _extend(job: JobSpec) -> dict:
    lags = load_cov(job.inputs["cov"])
    n = lags.shape[0] - 1
    b = _numerator(job, n)
    if job.command == "extend-periodic":
        if lags.ndim != 1:
            raise DataError("--cov: extend-periodic needs scalar lags (m = 1)")
        _check_N(job.N, n)
        model, report = solve(lags, b, job.N, job.config)
    elif job.command == "extend-line":
        if lags.ndim != 1:
            raise DataError("--cov: extend-line needs scalar lags (m = 1)")
        model, report = solve_line(lags, b, job.config)
    else:
        if lags.ndim == 1:
            lags = lags[:, None, None]
        _check_N(job.N, n)
        model, report = solve_vec(lags, b, job.N, job.config)
    return {"model": model.to_dict(), "report": report.to_dict()}


def _smooth(job: JobSpec) -> dict:
    ss = load_state(job.inputs["state"])
    b = load_poly(job.inputs["b"])
    _check_N(job.N, b.shape[0] - 1)
    x = None
    if "obs" in job.inputs:
        try:
            y = np.loadtxt(job.inputs["obs"], delimiter=",", skiprows=1, ndmin=2)
        except ValueError as exc:
            raise DataError(f"--obs: {exc}") from None
    else:
        x, y = simulate_state_space(ss, 2 * job.N, job.seed)
    problem, report = SmoothingProblem.from_state_space(ss, y, job.N, b, job.config)
    result = smooth(problem)
    oracle = direct_smooth_oracle(problem)
    dev = float(np.abs(result.x_hat - oracle).max() / max(np.abs(oracle).max(), 1e-300))
    out = {
        "prior": problem.prior.to_dict(),
        "report": report.to_dict(),
        "residuals": {"forward": result.forward_residual, "backward": result.backward_residual,
                      "normal": result.normal_residual, "oracle_relative": dev,
                      **result.diagnostics},
    }
    if x is not None:
        out["mse"] = {
            "smoother": np.mean((result.x_hat - x) ** 2, axis=0).tolist(),
            "least_squares": np.mean((np.linalg.lstsq(ss.C, y.T, rcond=None)[0].T - x) ** 2,
                                     axis=0).tolist(),
        }
    if "csv" in job.extra:
        t = np.arange(-job.N + 1, job.N + 1)
        header = ["t"] + [f"y{i + 1}" for i in range(y.shape[1])]
        cols = [t] + [y[:, i] for i in range(y.shape[1])]
        for i in range(ss.m):
            if x is not None:
                header.append(f"x{i + 1}")
                cols.append(x[:, i])
            header.append(f"xhat{i + 1}")
            cols.append(result.x_hat[:, i])
        write_csv(job.extra["csv"], header, zip(*cols))
    return out


def _simulate(job: JobSpec) -> dict:
    model = load_model(job.inputs["model"])
    if job.N is not None and job.N != model.N:
        _check_N(job.N, model.n)
        if isinstance(model, VectorPeriodicArmaModel):
            model = VectorPeriodicArmaModel(model.A, model.b, model.D, job.N)
        else:
            model = PeriodicArmaModel(model.a, model.b, model.sigma2, job.N)
    y = simulate_periodic(model, job.seed)
    Y = y[:, None] if y.ndim == 1 else y
    out = {"N": model.N, "length": int(Y.shape[0])}
    if "csv" in job.extra:
        t = np.arange(-model.N + 1, model.N + 1)
        header = ["t"] + [f"y{i + 1}" for i in range(Y.shape[1])]
        write_csv(job.extra["csv"], header, zip(t, *Y.T))
    n = job.extra.get("n", model.n)
    lags = sample_lags(Y, n)
    m = Y.shape[1]
    lag_doc = {"m": m, "n": n, "lags": lags[:, 0, 0].tolist() if m == 1 else lags.tolist()}
    if "lags_out" in job.extra:
        job.extra["lags_out"].write_text(dumps(lag_doc) + "\n")
    out["sample_lags"] = lag_doc
    return out


def run(job: JobSpec) -> int:
    """Execute a job, write its output document and return the exit code."""
    try:
        if job.command.startswith("extend-"):
            body = _extend(job)
        elif job.command == "smooth":
            body = _smooth(job)
        else:
            body = _simulate(job)
        doc = {"command": job.command, "status": "ok", "seed": job.seed, **body}
        code = EXIT_OK
    except UsageError as exc:
        doc, code = _error_doc(job, exc, EXIT_USAGE), EXIT_USAGE
    except ConvergenceError as exc:
        doc, code = _error_doc(job, exc, EXIT_NONCONVERGENCE), EXIT_NONCONVERGENCE
    except FactorizationError as exc:
        doc, code = _error_doc(job, exc, EXIT_INFEASIBLE), EXIT_INFEASIBLE
    except (DataError, DimensionError, CrcepError, ValueError, np.linalg.LinAlgError) as exc:
        doc, code = _error_doc(job, exc, EXIT_DATA), EXIT_DATA
    _emit(dumps(doc), job.output)
    if code:
        logger.error("%s failed: %s", job.command, doc["error"]["message"])
    return code


def _error_doc(job, exc, code) -> dict:
    doc = {"command": job.command if job else None, "status": "error", "seed": getattr(job, "seed", None),
           "error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    report = getattr(exc, "report", None)
    if report is not None:
        doc["report"] = report.to_dict()
    return doc


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def _configure_logging():
    level = os.environ.get("CRCEP_LOG", "error").upper()
    if level not in ("ERROR", "INFO", "DEBUG", "WARNING"):
        level = "ERROR"
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    try:
        job = parse_and_validate(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        _emit(dumps({"status": "error", "error": {"type": "UsageError", "message": str(exc),
                                                  "exit_code": EXIT_USAGE}}), None)
        return EXIT_USAGE
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
