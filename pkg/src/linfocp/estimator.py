"""Maximum-norm residual indicators for the discrete optimality system.

For an element T with diameter h_T in dimension d = 2:

* state:   h_T^(2-d/2) ||f + u||_{L2(T)} + h_T max_S |[[grad y . n]]|
* adjoint: h_T^(2-d/2) ||y - y_omega||_{L2(T)} + h_T max_S |[[grad p . n]]|
* control: sup_T |clip(-p/lam, a, b) - u|

with S ranging over the interior sides of T. Global components are maxima
over elements; totals are root-sum-squares.
"""
from dataclasses import dataclass

import numpy as np

from . import fem
from ._backend import kernels
from .errors import InputError
from .mesh import patch_reduce

DIM = 2
VOLUME_POWER = 2.0 - DIM / 2.0
OSC_POWER = 4.0 - DIM


def gradients(mesh, fe):
    """(ne, 2) elementwise constant gradient of a P1 function."""
    g = fem.barycentric_gradients(mesh)
    return np.einsum("tk,tkd->td", fem.nodal(fe)[mesh.elements], g)


def side_normals(mesh, side_table):
    """Unit normals of the interior sides pointing out of the first neighbour."""
    x = mesh.vertices[side_table.sides]
    d = x[:, 1] - x[:, 0]
    n = np.column_stack([d[:, 1], -d[:, 0]]) / side_table.side_length[:, None]
    c = mesh.centroids[side_table.neighbors[:, 0]]
    flip = np.einsum("sd,sd->s", x[:, 0] - c, n) < 0.0
    n[flip] *= -1.0
    return n


def side_jumps(mesh, side_table, fe):
    """Normal-derivative jump on every interior side (constant per side)."""
    if side_table.num_sides == 0:
        return np.zeros(0)
    g = gradients(mesh, fe)
    n = side_normals(mesh, side_table)
    plus, minus = side_table.neighbors[:, 0], side_table.neighbors[:, 1]
    # n+ . grad w+ + n- . grad w- with n- = -n+
    return np.einsum("sd,sd->s", n, g[plus] - g[minus])


def side_jump(mesh, side_table, fe, s):
    g = gradients(mesh, fe)
    n = side_normals(mesh, side_table)[s]
    plus, minus = side_table.neighbors[s]
    return float(n @ g[plus] - n @ g[minus])


def _max_side_jump(mesh, side_table, fe):
    jumps = np.abs(side_jumps(mesh, side_table, fe))
    es = side_table.element_sides
    vals = np.where(es >= 0, jumps[np.maximum(es, 0)] if jumps.size else 0.0, 0.0)
    return vals.max(axis=1)


def _at_quad(mesh, quad, fe=None, g=None):
    if fe is not None:
        return fem.nodal(fe)[mesh.elements] @ quad.points.T
    pts = quad.physical_points(mesh)
    return np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])


def _residual_indicator(mesh, side_table, volume_values, jump_fe, quad):
    h = mesh.diameters
    vol = fem.element_l2_norms(mesh, volume_values, quad)
    return h ** VOLUME_POWER * vol + h * _max_side_jump(mesh, side_table, jump_fe)


def indicator_y(mesh, side_table, y, u, f, quad=None):
    """Per-element state indicator."""
    quad = quad or fem.quadrature(5)
    vals = _at_quad(mesh, quad, g=f) + _at_quad(mesh, quad, fe=u)
    return _residual_indicator(mesh, side_table, vals, y, quad)


def indicator_p(mesh, side_table, p, y, y_omega, quad=None):
    """Per-element adjoint indicator."""
    quad = quad or fem.quadrature(5)
    vals = _at_quad(mesh, quad, fe=y) - _at_quad(mesh, quad, g=y_omega)
    return _residual_indicator(mesh, side_table, vals, p, quad)


def indicator_u(mesh, u, p, lam, a, b):
    """Per-element exact sup of ``|clip(-p/lam, a, b) - u|``."""
    if not lam > 0.0:
        raise InputError("lam must be positive", module="estimator")
    el = mesh.elements
    w = -fem.nodal(p)[el] / lam
    return kernels.clamp_gap_sup(np.ascontiguousarray(w),
                                 np.ascontiguousarray(fem.nodal(u)[el]),
                                 float(a), float(b))


def log_factor(h):
    """|log(max_T 1/h_T)|, i.e. |log| of the smallest element diameter."""
    return float(abs(np.log(np.max(1.0 / np.asarray(h, dtype=float)))))


@dataclass(frozen=True, eq=False)
class IndicatorField:
    e_y: np.ndarray
    e_p: np.ndarray
    e_u: np.ndarray
    e_total: np.ndarray
    est_y: float
    est_p: float
    est_u: float
    est_total: float
    log_factor: float

    @property
    def per_element(self):
        """(ne, 4) columns E_y, E_p, E_u, E."""
        return np.column_stack([self.e_y, self.e_p, self.e_u, self.e_total])


def combine(e_y, e_p, e_u, h):
    """Assemble local and global estimators; ``h`` are element diameters."""
    e_y, e_p, e_u = (np.asarray(v, dtype=float) for v in (e_y, e_p, e_u))
    if not (e_y.shape == e_p.shape == e_u.shape) or e_y.size == 0:
        raise InputError("indicator arrays must be nonempty and equally long",
                         module="estimator")
    gy, gp, gu = float(e_y.max()), float(e_p.max()), float(e_u.max())
    return IndicatorField(e_y=e_y, e_p=e_p, e_u=e_u,
                          e_total=np.sqrt(e_y ** 2 + e_p ** 2 + e_u ** 2),
                          est_y=gy, est_p=gp, est_u=gu,
                          est_total=float(np.sqrt(gy ** 2 + gp ** 2 + gu ** 2)),
                          log_factor=log_factor(h))


def estimate(mesh, side_table, solution, problem, quad=None):
    """All indicators for an :class:`~linfocp.ocp.OcpSolution`."""
    quad = quad or fem.quadrature(5)
    ey = indicator_y(mesh, side_table, solution.y, solution.u, problem.f, quad)
    ep = indicator_p(mesh, side_table, solution.p, solution.y, problem.y_omega, quad)
    eu = indicator_u(mesh, solution.u, solution.p, problem.lam, problem.a, problem.b)
    return combine(ey, ep, eu, mesh.diameters)


@dataclass(frozen=True, eq=False)
class OscillationField:
    """``per_element`` holds h_T^(4-d) ||g - P g||^2_{L2(T)}; ``patch`` the
    square root of its sum over each patch N_T; ``patch_max`` the largest
    patch value."""

    per_element: np.ndarray
    patch: np.ndarray
    patch_max: float


_MASS_REF_INV = np.linalg.inv((np.ones((3, 3)) + np.eye(3)) / 12.0)


def local_projection(mesh, g, quad=None):
    """(ne, 3) nodal coefficients of the elementwise L2 projection onto P1."""
    quad = quad or fem.quadrature(5)
    vals = _at_quad(mesh, quad, g=g)
    # rhs / area
    rhs = (vals * quad.weights) @ quad.points
    return rhs @ _MASS_REF_INV.T


def oscillation(mesh, g, quad=None, side_table=None):
    quad = quad or fem.quadrature(5)
    coef = local_projection(mesh, g, quad)
    diff = _at_quad(mesh, quad, g=g) - coef @ quad.points.T
    per = mesh.diameters ** OSC_POWER * mesh.areas * (diff ** 2 @ quad.weights)
    if side_table is None:
        from .mesh import build_side_table
        side_table = build_side_table(mesh)
    patch = np.sqrt(patch_reduce(mesh, side_table, per, how="sum"))
    return OscillationField(per_element=per, patch=patch,
                            patch_max=float(patch.max()) if patch.size else 0.0)


def patch_errors(mesh, side_table, *per_element_errors):
    """Sum over components of the patch maxima of per-element errors."""
    total = np.zeros(mesh.num_elements)
    for err in per_element_errors:
        total += patch_reduce(mesh, side_table, err, how="max")
    return total


def efficiency_ratios(e_total, patch_error, *patch_oscillations):
    """``E(T) / (patch error + patch oscillations)``; NaN where the
    denominator vanishes."""
    num = np.asarray(e_total, dtype=float)
    den = np.asarray(patch_error, dtype=float).copy()
    for osc in patch_oscillations:
        den = den + np.asarray(osc, dtype=float)
    out = np.full(num.shape, np.nan)
    ok = den > 0.0
    out[ok] = num[ok] / den[ok]
    return out
