"""Command-line driver for the convergence experiments.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""
import argparse
from dataclasses import dataclass
import logging
import os
import sys

from . import adaptive, benchmark
from .errors import InputError, LinfOcpError
from .vtkio import export_vtk

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
RATE_WINDOW = 10


@dataclass(frozen=True)
class RunConfig:
    problem: str = "lshape-paper"
    mode: str = "adaptive"
    theta: float = 0.5
    lam: float = 1.0
    max_ndof: int = 100_000
    max_iterations: int = 200
    solver_tol: float = 1e-10
    sample_order: int = 4
    output_dir: str = "runs/latest"
    export_vtk_every: int = 0

    def adaptive_config(self):
        return adaptive.AdaptiveConfig(theta=self.theta, max_ndof=self.max_ndof,
                                       max_iterations=self.max_iterations,
                                       mode=self.mode, solver_tol=self.solver_tol,
                                       sample_order=self.sample_order)


def _snapshot(out, it, mesh, sol, ind):
    export_vtk(mesh, os.path.join(out, f"mesh_{it:04d}.vtk"),
               point_data={"y": sol.y.values, "p": sol.p.values, "u": sol.u.values},
               cell_data={"est_y": ind.e_y, "est_p": ind.e_p, "est_u": ind.e_u,
                          "est_total": ind.e_total})


def run(config, stream=None):
    """Run one experiment; writes ``history.csv`` and VTK snapshots into
    ``config.output_dir`` and returns the :class:`AdaptiveResult`."""
    stream = stream or sys.stdout
    bm = benchmark.get_benchmark(config.problem, lam=config.lam)
    acfg = config.adaptive_config()
    out = config.output_dir
    every = config.export_vtk_every
    os.makedirs(out, exist_ok=True)

    def callback(it, mesh, sol, ind):
        if every > 0 and it % every == 0:
            _snapshot(out, it, mesh, sol, ind)

    result = adaptive.adaptive_loop(bm.problem(), acfg, truth=bm.exact,
                                    callback=callback)
    record = result.record
    if every >= 0:
        _snapshot(out, record.rows[-1].iteration, result.mesh, result.solution,
                  result.indicators)
    record.write_csv(os.path.join(out, "history.csv"))
    if len(record) >= 2:
        window = min(RATE_WINDOW, len(record))
        for col in ("est_total", "err_total"):
            rate = adaptive.fit_rate(record, col, window)
            print(f"rate {col} (last {window} rows): {rate:.4f}", file=stream)
    return result


def build_parser():
    p = argparse.ArgumentParser(
        prog="linfocp",
        description="Adaptive max-norm estimation for a control-constrained "
                    "Poisson optimal control problem.")
    d = RunConfig()
    p.add_argument("--problem", default=d.problem,
                   help=f"one of: {', '.join(benchmark.benchmark_names())}")
    p.add_argument("--mode", default=d.mode, choices=adaptive.MODES)
    p.add_argument("--theta", type=float, default=d.theta,
                   help="maximum-strategy marking fraction in (0, 1]")
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam,
                   help="control cost weight")
    p.add_argument("--max-ndof", type=float, default=d.max_ndof,
                   help="stop once Ndof (3 x vertices) reaches this value")
    p.add_argument("--max-iters", type=int, default=d.max_iterations)
    p.add_argument("--tol", type=float, default=d.solver_tol,
                   help="optimality-system solver tolerance")
    p.add_argument("--sample-order", type=int, default=d.sample_order,
                   help="lattice order for sampled max-norm errors")
    p.add_argument("--out", default=d.output_dir, help="output directory")
    p.add_argument("--vtk-every", type=int, default=d.export_vtk_every,
                   help="VTK snapshot period; 0 = final mesh only, <0 = none")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    config = RunConfig(problem=args.problem, mode=args.mode, theta=args.theta,
                       lam=args.lam, max_ndof=int(args.max_ndof),
                       max_iterations=args.max_iters, solver_tol=args.tol,
                       sample_order=args.sample_order, output_dir=args.out,
                       export_vtk_every=args.vtk_every)
    try:
        # validate everything before touching the file system
        benchmark.get_benchmark(config.problem, lam=config.lam)
        config.adaptive_config()
        run(config)
    except InputError as exc:
        print(f"error: {exc.diagnostic()}", file=sys.stderr)
        return EXIT_INPUT
    except LinfOcpError as exc:
        print(f"error: {exc.diagnostic()}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
