"""SOLVE -> ESTIMATE -> MARK -> REFINE with maximum-strategy marking."""
from dataclasses import astuple, dataclass, fields
import csv
import io
import logging
import math
import os
import tempfile

import numpy as np

from . import benchmark
from .errors import InputError, LinfOcpError
from .estimator import estimate
from .mesh import build_side_table, prolongate, refine
from .ocp import solve_ocp

log = logging.getLogger(__name__)

MODES = ("adaptive", "uniform")


@dataclass(frozen=True)
class AdaptiveConfig:
    theta: float = 0.5
    max_ndof: int = 100_000
    max_iterations: int = 200
    mode: str = "adaptive"
    solver_tol: float = 1e-10
    sample_order: int = 4

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise InputError(f"theta must lie in (0, 1], got {self.theta}",
                             module="adaptive")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}",
                             module="adaptive")
        if self.max_iterations < 1:
            raise InputError("max_iterations must be >= 1", module="adaptive")
        if self.max_ndof < 1:
            raise InputError("max_ndof must be >= 1", module="adaptive")
        if not self.solver_tol > 0.0:
            raise InputError("solver_tol must be positive", module="adaptive")
        if self.sample_order < 1:
            raise InputError("sample_order must be >= 1", module="adaptive")


@dataclass(frozen=True)
class ConvergenceRow:
    iteration: int
    ndof: int
    est_y: float
    est_p: float
    est_u: float
    est_total: float
    err_y: float
    err_p: float
    err_u: float
    err_total: float
    ell_T: float
    marked: int
    elements: int


COLUMNS = tuple(f.name for f in fields(ConvergenceRow))


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return repr(float(v))


class ConvergenceRecord:
    """Per-iteration history of an adaptive run."""

    def __init__(self, rows=()):
        self.rows = list(rows)

    def __len__(self):
        return len(self.rows)

    def append(self, row):
        self.rows.append(row)

    def column(self, name):
        if name not in COLUMNS:
            raise InputError(f"unknown column {name!r}", module="adaptive")
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(v) for v in astuple(r)])
        return buf.getvalue()

    def write_csv(self, path):
        """Write atomically (temporary file, then rename)."""
        path = os.fspath(path)
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".history-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(self.to_csv_text())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def read_csv(cls, path):
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                vals = {}
                for f in fields(ConvergenceRow):
                    raw = rec[f.name]
                    vals[f.name] = int(raw) if f.type in (int, "int") else float(raw)
                rows.append(ConvergenceRow(**vals))
        return cls(rows)


def mark_maximum(indicators, theta):
    """Indices with ``E(T) >= theta * max E``."""
    E = np.asarray(indicators, dtype=float)
    if E.size == 0:
        raise InputError("cannot mark an empty indicator list", module="adaptive")
    if not 0.0 < theta <= 1.0:
        raise InputError(f"theta must lie in (0, 1], got {theta}", module="adaptive")
    return set(np.flatnonzero(E >= theta * E.max()).tolist())


def fit_rate(record, column, window=10):
    """Least-squares slope of log(column) against log(ndof) over the last
    ``window`` rows."""
    if window < 2 or len(record) < 2:
        raise InputError("need at least two rows to fit a rate", module="adaptive")
    y = record.column(column)[-window:]
    x = record.column("ndof")[-window:]
    if np.any(~(y > 0.0)) or np.any(~(x > 0.0)):
        raise InputError(f"column {column!r} has nonpositive values in the window",
                         module="adaptive")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@dataclass
class AdaptiveResult:
    record: ConvergenceRecord
    mesh: object
    solution: object
    indicators: object


def adaptive_loop(problem, config=None, truth=None, callback=None):
    """Run the adaptive (or uniform) loop from ``problem.mesh``.

    Parameters
    ----------
    problem : OcpProblem
    config : AdaptiveConfig
    truth : ExactSolution, optional
        Enables the error columns; they are NaN otherwise.
    callback : callable, optional
        ``callback(iteration, mesh, solution, indicators)`` after each estimate.

    Stops after solving a mesh with ``ndof >= max_ndof`` or at the iteration
    cap.
    """
    config = config or AdaptiveConfig()
    record = ConvergenceRecord()
    mesh = problem.mesh
    u0 = None
    nan = float("nan")
    for it in range(config.max_iterations):
        try:
            prob = problem.on(mesh)
            sol = solve_ocp(prob, tol=config.solver_tol, initial_control=u0)
            side_table = build_side_table(mesh)
            ind = estimate(mesh, side_table, sol, prob)
            if truth is not None:
                err = benchmark.measure_errors(mesh, sol, truth, config.sample_order)
                errs = (err.err_y, err.err_p, err.err_u, err.total)
            else:
                errs = (nan,) * 4
            ndof = 3 * mesh.num_vertices
            last = ndof >= config.max_ndof or it == config.max_iterations - 1
            if last:
                marked = set()
            elif config.mode == "uniform":
                marked = set(range(mesh.num_elements))
            else:
                marked = mark_maximum(ind.e_total, config.theta)
            record.append(ConvergenceRow(
                it, ndof, ind.est_y, ind.est_p, ind.est_u, ind.est_total, *errs,
                ind.log_factor, len(marked), mesh.num_elements))
            log.info("iteration %d: ndof=%d est=%.3e err=%.3e", it, ndof,
                     ind.est_total, errs[3])
            if callback is not None:
                callback(it, mesh, sol, ind)
            if last:
                break
            mesh = refine(mesh, marked)
            u0 = prolongate(mesh, sol.u.values)
        except LinfOcpError as exc:
            if exc.iteration is None:
                exc.iteration = it
            raise
    return AdaptiveResult(record, mesh, sol, ind)
