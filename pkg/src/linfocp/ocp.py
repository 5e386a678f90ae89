"""Discrete optimality system of the control-constrained Poisson problem.

State ``A y = F + M u``, adjoint ``A p = M y - G``, and the control
variational inequality in the lumped-mass inner product, which decouples
nodally into ``u_i = clip(-p_i / lam, a, b)``.
"""
from dataclasses import dataclass, replace
import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .errors import InputError, NonConvergenceError, NumericalError

log = logging.getLogger(__name__)


def clamp_projection(w, a, b):
    """Pointwise ``min(b, max(a, w))``."""
    if a > b:
        raise InputError(f"empty admissible interval [{a}, {b}]", module="ocp")
    return np.minimum(b, np.maximum(a, w))


@dataclass(frozen=True, eq=False)
class OcpProblem:
    f: object
    y_omega: object
    lam: float
    a: float
    b: float
    mesh: object

    def __post_init__(self):
        if not self.lam > 0.0:
            raise InputError(f"control cost must be positive, got {self.lam}",
                             module="ocp")
        if not self.a <= self.b:
            raise InputError(f"bounds violate a <= b: a={self.a}, b={self.b}",
                             module="ocp")
        if not self.a <= 0.0 <= self.b:
            raise InputError("bounds must satisfy a <= 0 <= b", module="ocp")

    def on(self, mesh):
        return replace(self, mesh=mesh)


@dataclass(frozen=True, eq=False)
class OcpSolution:
    y: fem.FeFunction
    p: fem.FeFunction
    u: fem.FeFunction
    multiplier: np.ndarray
    iterations: int
    state_residual: float = 0.0
    adjoint_residual: float = 0.0


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    """Interior-vertex blocks shared by the solver and its checks."""

    A: sp.csr_matrix
    M: sp.csr_matrix
    D: np.ndarray
    F: np.ndarray
    G: np.ndarray

    @classmethod
    def assemble(cls, problem, quad=None):
        mesh = problem.mesh
        idx = mesh.interior_vertices
        M, lumped = fem.assemble_mass(mesh)
        return cls(A=fem.assemble_stiffness(mesh), M=fem.restrict(M, mesh),
                   D=lumped[idx],
                   F=fem.assemble_load(mesh, problem.f, quad)[idx],
                   G=fem.assemble_load(mesh, problem.y_omega, quad)[idx])

    def residuals(self, y, p, u):
        """Relative residuals of the state and adjoint equations."""
        rs = self.A @ y - self.F - self.M @ u
        ra = self.A @ p - self.M @ y + self.G
        ns = max(np.linalg.norm(self.F + self.M @ u), 1e-300)
        na = max(np.linalg.norm(self.M @ y - self.G), 1e-300)
        return np.linalg.norm(rs) / ns, np.linalg.norm(ra) / na


def _active_sets(p, lam, a, b):
    w = -p / lam
    return w < a, w > b


def _solve_with_sets(sysm, lower, upper, lam, a, b):
    n = len(sysm.D)
    free = ~(lower | upper)
    u_act = np.where(lower, a, 0.0) + np.where(upper, b, 0.0)
    E = sp.diags(free.astype(float) / lam)
    K = sp.bmat([[sysm.A, sysm.M @ E], [-sysm.M, sysm.A]], format="csc")
    rhs = np.concatenate([sysm.F + sysm.M @ u_act, -sysm.G])
    sol = spla.spsolve(K, rhs)
    y, p = sol[:n], sol[n:]
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(p))):
        raise NumericalError("coupled solve produced non-finite values", module="ocp")
    u = np.where(free, -p / lam, u_act)
    return y, p, u


def _fixed_point(sysm, u, lam, a, b, tol, max_iter):
    lu = spla.splu(sysm.A.tocsc())
    omega = min(1.0, lam / (lam + 0.1))
    for k in range(1, max_iter + 1):
        y = lu.solve(sysm.F + sysm.M @ u)
        p = lu.solve(sysm.M @ y - sysm.G)
        u_new = (1.0 - omega) * u + omega * clamp_projection(-p / lam, a, b)
        change = np.abs(u_new - u).max() if u.size else 0.0
        u = u_new
        if change <= tol:
            y = lu.solve(sysm.F + sysm.M @ u)
            p = lu.solve(sysm.M @ y - sysm.G)
            return y, p, u, k
    raise NonConvergenceError("damped fixed-point iteration did not converge",
                              module="ocp", last_iterate=(y, p, u), residual=change)


def solve_ocp(problem, tol=1e-10, max_iter=100, initial_control=None,
              system=None):
    """Primal-dual active set solution of the discrete optimality system.

    Parameters
    ----------
    problem : OcpProblem
    tol : float
        Tolerance on the nodal control update and the complementarity checks.
    max_iter : int
    initial_control : array, optional
        Nodal control over all vertices used to seed the active sets.
    system : DiscreteSystem, optional
        Pre-assembled blocks for ``problem.mesh``.

    Returns
    -------
    OcpSolution
    """
    mesh = problem.mesh
    lam, a, b = problem.lam, problem.a, problem.b
    sysm = system or DiscreteSystem.assemble(problem)
    idx = mesh.interior_vertices
    n = len(idx)

    if initial_control is None:
        u = np.zeros(n)
    else:
        u = clamp_projection(np.asarray(initial_control, dtype=float)[idx], a, b)
    if n == 0 or a == b:
        # the control is pinned; one state and one adjoint solve
        u = np.full(n, float(a))
        lower, upper = np.ones(n, bool), np.zeros(n, bool)
        y, p, u = _solve_with_sets(sysm, lower, upper, lam, a, b) if n else (u, u, u)
        return _finish(mesh, sysm, y, p, u, lam, 1)
    # sets seeded from the adjoint of the initial control
    lu = spla.splu(sysm.A.tocsc())
    y = lu.solve(sysm.F + sysm.M @ u)
    p = lu.solve(sysm.M @ y - sysm.G)
    lower, upper = _active_sets(p, lam, a, b)

    seen = set()
    iterations = 0
    converged = False
    prev_u = u
    while iterations < max_iter:
        iterations += 1
        y, p, u = _solve_with_sets(sysm, lower, upper, lam, a, b)
        new_lower, new_upper = _active_sets(p, lam, a, b)
        change = np.abs(u - prev_u).max()
        prev_u = u
        if (np.array_equal(new_lower, lower) and np.array_equal(new_upper, upper)) \
                or change <= tol:
            converged = True
            break
        key = (new_lower.tobytes(), new_upper.tobytes())
        if key in seen:
            log.info("active sets cycle after %d iterations; switching to "
                     "damped fixed point", iterations)
            y, p, u, extra = _fixed_point(sysm, clamp_projection(u, a, b), lam, a, b,
                                          tol, max_iter)
            iterations += extra
            converged = True
            break
        seen.add(key)
        lower, upper = new_lower, new_upper
    if not converged:
        raise NonConvergenceError(
            f"active-set iteration did not converge in {max_iter} steps",
            module="ocp", last_iterate=(y, p, u))

    return _finish(mesh, sysm, y, p, clamp_projection(u, a, b), lam, iterations)


def _finish(mesh, sysm, y, p, u, lam, iterations):
    rs, ra = sysm.residuals(y, p, u) if len(u) else (0.0, 0.0)
    mu = sysm.D * (p + lam * u)
    return OcpSolution(y=fem.FeFunction.from_interior(mesh, y),
                       p=fem.FeFunction.from_interior(mesh, p),
                       u=fem.FeFunction.from_interior(mesh, u),
                       multiplier=mu, iterations=iterations,
                       state_residual=rs, adjoint_residual=ra)


def vi_residual(solution, problem):
    """Most negative ``D_i (p_i + lam u_i)(v - u_i)`` over interior vertices
    and ``v`` in ``{a, b}``; nonnegative (up to roundoff) certifies the
    discrete variational inequality."""
    mesh = problem.mesh
    idx = mesh.interior_vertices
    if idx.size == 0:
        return 0.0
    _, lumped = fem.assemble_mass(mesh)
    p = fem.nodal(solution.p)[idx]
    u = fem.nodal(solution.u)[idx]
    g = lumped[idx] * (p + problem.lam * u)
    return float(min((g * (problem.a - u)).min(), (g * (problem.b - u)).min()))


def complementarity_violation(solution, problem):
    """Largest violation of the sign conditions on the multiplier."""
    idx = problem.mesh.interior_vertices
    u = fem.nodal(solution.u)[idx]
    mu = solution.multiplier
    at_a = u <= problem.a
    at_b = u >= problem.b
    free = ~(at_a | at_b)
    worst = 0.0
    if (at_a & ~at_b).any():
        worst = max(worst, float(np.max(-mu[at_a & ~at_b])))
    if (at_b & ~at_a).any():
        worst = max(worst, float(np.max(mu[at_b & ~at_a])))
    if free.any():
        worst = max(worst, float(np.max(np.abs(mu[free]))))
    return max(worst, 0.0)
