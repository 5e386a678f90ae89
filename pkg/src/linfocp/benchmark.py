"""Manufactured test problems with known optimal state, adjoint and control.

``lshape-paper`` lives on the L-shaped domain with the corner singularity
s = r^(2/3) sin(2 theta / 3), theta in [0, 3 pi / 2]. Since s is harmonic,
Laplacians of products w s reduce to ``s lap(w) + 2 grad(w) . grad(s)``.
Data follow from the optimality system: ``f = -lap(y) - u`` and
``y_omega = y + lap(p)``.
"""
from dataclasses import dataclass

import numpy as np

from . import fem, mesh as meshmod
from .errors import DomainError, InputError
from .ocp import OcpProblem, clamp_projection

_DOMAIN_TOL = 1e-12


def _xy(points):
    pts = np.asarray(points, dtype=float)
    return pts[..., 0], pts[..., 1]


def polar(points):
    """(r, theta) with theta in [0, 3 pi / 2]; rejects the removed quadrant."""
    x, y = _xy(points)
    if np.any((x > _DOMAIN_TOL) & (y < -_DOMAIN_TOL)):
        raise DomainError("point in the removed quadrant (x > 0, y < 0)",
                          module="benchmark")
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0.0, theta + 2.0 * np.pi, theta)
    # points on the positive x-axis that rounded below zero
    theta = np.where(theta > 1.5 * np.pi + 1e-9, 0.0, theta)
    return np.hypot(x, y), theta


def corner_singularity(points):
    r, theta = polar(points)
    return r ** (2.0 / 3.0) * np.sin(2.0 * theta / 3.0)


def corner_singularity_gradient(points):
    r, theta = polar(points)
    if np.any(r == 0.0):
        raise DomainError("gradient of r^(2/3) sin(2 theta/3) is singular at the "
                          "origin", module="benchmark")
    c = (2.0 / 3.0) * r ** (-1.0 / 3.0)
    return c * -np.sin(theta / 3.0), c * np.cos(theta / 3.0)


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form optimal triple of a benchmark."""

    benchmark: object

    @property
    def lam(self):
        return self.benchmark.lam

    @property
    def a(self):
        return self.benchmark.a

    @property
    def b(self):
        return self.benchmark.b

    def y_bar(self, x):
        return self.benchmark.y(x)

    def p_bar(self, x):
        return self.benchmark.p(x)

    def u_bar(self, x):
        return clamp_projection(-self.benchmark.p(x) / self.lam, self.a, self.b)


class Benchmark:
    """Base class: subclasses define y, p, their Laplacians and the domain.

    New problems register with :func:`register_benchmark`.
    """

    name = None
    a, b = 0.0, 1.0

    def __init__(self, lam=1.0):
        self.lam = float(lam)
        self.exact = ExactSolution(self)

    def u(self, x):
        return self.exact.u_bar(x)

    def f(self, x):
        return -self.laplacian_y(x) - self.u(x)

    def y_omega(self, x):
        return self.y(x) + self.laplacian_p(x)

    def manufactured_data(self, x):
        return self.f(x), self.y_omega(x)

    def exact_eval(self, which, x):
        funcs = {"y": self.y, "p": self.p, "u": self.u}
        if which not in funcs:
            raise InputError(f"unknown field {which!r}", module="benchmark")
        return funcs[which](x)

    def problem(self, mesh=None):
        return OcpProblem(f=self.f, y_omega=self.y_omega, lam=self.lam,
                          a=self.a, b=self.b, mesh=mesh or self.initial_mesh())


class LShapeBenchmark(Benchmark):
    name = "lshape-paper"
    a, b = 0.0, 1.0

    def initial_mesh(self):
        return meshmod.initial_lshape_mesh()

    @staticmethod
    def _smooth_y(x):
        X, Y = _xy(x)
        w = (1.0 - X ** 2) * (1.0 - Y ** 2)
        grad = (-2.0 * X * (1.0 - Y ** 2), -2.0 * Y * (1.0 - X ** 2))
        lap = -2.0 * (1.0 - Y ** 2) - 2.0 * (1.0 - X ** 2)
        return w, grad, lap

    @staticmethod
    def _smooth_p(x):
        X, Y = _xy(x)
        sx, cx = np.sin(2 * np.pi * X), np.cos(2 * np.pi * X)
        sy, cy = np.sin(2 * np.pi * Y), np.cos(2 * np.pi * Y)
        q = sx * sy
        grad = (2 * np.pi * cx * sy, 2 * np.pi * sx * cy)
        return q, grad, -8.0 * np.pi ** 2 * q

    @staticmethod
    def _laplacian(smooth, x):
        w, (wx, wy), lap_w = smooth(x)
        sx, sy = corner_singularity_gradient(x)
        return corner_singularity(x) * lap_w + 2.0 * (wx * sx + wy * sy)

    def y(self, x):
        return self._smooth_y(x)[0] * corner_singularity(x)

    def p(self, x):
        return self._smooth_p(x)[0] * corner_singularity(x)

    def laplacian_y(self, x):
        return self._laplacian(self._smooth_y, x)

    def laplacian_p(self, x):
        return self._laplacian(self._smooth_p, x)


class SquareSmoothBenchmark(Benchmark):
    """Smooth solution on (0,1)^2 with both control bounds partially active."""

    name = "square-smooth"
    a, b = -0.5, 0.5

    def initial_mesh(self):
        return meshmod.unit_square_mesh()

    @staticmethod
    def _check(x):
        X, Y = _xy(x)
        t = _DOMAIN_TOL
        if np.any((X < -t) | (X > 1 + t) | (Y < -t) | (Y > 1 + t)):
            raise DomainError("point outside the unit square", module="benchmark")
        return X, Y

    def y(self, x):
        X, Y = self._check(x)
        return np.sin(np.pi * X) * np.sin(np.pi * Y)

    def p(self, x):
        X, Y = self._check(x)
        return np.sin(2 * np.pi * X) * np.sin(np.pi * Y)

    def laplacian_y(self, x):
        return -2.0 * np.pi ** 2 * self.y(x)

    def laplacian_p(self, x):
        return -5.0 * np.pi ** 2 * self.p(x)


_REGISTRY = {}


def register_benchmark(cls):
    _REGISTRY[cls.name] = cls
    return cls


register_benchmark(LShapeBenchmark)
register_benchmark(SquareSmoothBenchmark)


def benchmark_names():
    return sorted(_REGISTRY)


def get_benchmark(name, lam=1.0):
    if name not in _REGISTRY:
        raise InputError(f"unknown problem {name!r}; choose from "
                         f"{', '.join(benchmark_names())}", module="benchmark")
    if not lam > 0.0:
        raise InputError("lambda must be positive", module="benchmark")
    return _REGISTRY[name](lam)


@dataclass(frozen=True)
class ErrorMeasurement:
    err_y: float
    err_p: float
    err_u: float
    total: float
    per_element: np.ndarray  # (ne, 3) sampled maxima of |e_y|, |e_p|, |e_u|


def total_error(err_y, err_p, err_u):
    return float(np.sqrt(err_y ** 2 + err_p ** 2 + err_u ** 2))


def measure_errors(mesh, solution, exact, sample_order=4):
    """Sampled max-norm errors (order-k lattice) and their root-sum-square."""
    parts = [fem.linf_distance_sampled(mesh, fe, g, sample_order)
             for fe, g in ((solution.y, exact.y_bar), (solution.p, exact.p_bar),
                           (solution.u, exact.u_bar))]
    ey, ep, eu = (g for _, g in parts)
    return ErrorMeasurement(ey, ep, eu, total_error(ey, ep, eu),
                            np.column_stack([pe for pe, _ in parts]))


def effectivity(row):
    """``max(1, ell_T) * E / total_err`` for a convergence row (NaN if the
    error vanishes)."""
    err = row.err_total
    if err is None or not err > 0.0:
        return float("nan")
    return max(1.0, row.ell_T) * row.est_total / err
