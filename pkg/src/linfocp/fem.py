"""P1 Lagrange finite elements on triangle meshes.

Scalar fields passed to this module are callables ``g(points)`` mapping an
array of shape (n, 2) to shape (n,).
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, InputError, MeshStructureError, NumericalError


@dataclass(frozen=True)
class Quadrature:
    """Rule on the reference triangle in barycentric coordinates; weights
    sum to 1 and are scaled by the element area on use."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def physical_points(self, mesh):
        """(ne, nq, 2) quadrature nodes on every element."""
        return np.einsum("qk,tkd->tqd", self.points, mesh.vertices[mesh.elements])


def _strang_fix_7():
    s = np.sqrt(15.0)
    a1, a2 = (6.0 - s) / 21.0, (6.0 + s) / 21.0
    w1, w2 = (155.0 - s) / 1200.0, (155.0 + s) / 1200.0
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [9.0 / 40.0]
    for a, w in ((a1, w1), (a2, w2)):
        for k in range(3):
            p = [a, a, a]
            p[k] = 1.0 - 2.0 * a
            pts.append(tuple(p))
            wts.append(w)
    return Quadrature(np.array(pts), np.array(wts), 5)


def collapsed_gauss(degree):
    """Duffy-collapsed Gauss-Legendre product rule exact to ``degree``."""
    n = max(1, int(np.ceil((degree + 2) / 2.0)))
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    s, t = np.meshgrid(x, x, indexing="ij")
    ws, wt = np.meshgrid(w, w, indexing="ij")
    # (s, t) in the unit square -> (s, (1 - s) t) in the triangle
    xi = s.ravel()
    eta = ((1.0 - s) * t).ravel()
    weights = (ws * wt * (1.0 - s)).ravel() * 2.0
    points = np.column_stack([1.0 - xi - eta, xi, eta])
    return Quadrature(points, weights, degree)


_SEVEN_POINT = _strang_fix_7()


def quadrature(degree=5):
    """Quadrature exact for polynomials of total ``degree``."""
    if degree < 0:
        raise InputError("quadrature degree must be nonnegative", module="fem")
    if degree <= 5:
        return _SEVEN_POINT
    return collapsed_gauss(degree)


def barycentric_gradients(mesh):
    """(ne, 3, 2) constant gradients of the barycentric coordinates."""
    x = mesh.vertices[mesh.elements]
    area = mesh.areas
    if np.any(area <= 0.0):
        raise MeshStructureError("degenerate element in assembly", module="fem")
    g = np.empty((mesh.num_elements, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[:, i, 0] = x[:, j, 1] - x[:, k, 1]
        g[:, i, 1] = x[:, k, 0] - x[:, j, 0]
    return g / (2.0 * area)[:, None, None]


def local_stiffness(mesh):
    g = barycentric_gradients(mesh)
    return mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", g, g)


_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0


def local_mass(mesh):
    if np.any(mesh.areas <= 0.0):
        raise MeshStructureError("degenerate element in assembly", module="fem")
    return mesh.areas[:, None, None] * _MASS_REF


def _assemble(mesh, local):
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    n = mesh.num_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def restrict(matrix, mesh):
    """Interior-vertex block of a full-vertex matrix."""
    idx = mesh.interior_vertices
    return matrix[idx][:, idx]


def assemble_stiffness(mesh, full=False):
    """Stiffness matrix; the interior block unless ``full`` is set."""
    A = _assemble(mesh, local_stiffness(mesh))
    return A if full else restrict(A, mesh)


def assemble_mass(mesh):
    """Consistent mass matrix and lumped diagonal, both over all vertices."""
    M = _assemble(mesh, local_mass(mesh))
    return M, np.asarray(M.sum(axis=1)).ravel()


def assemble_load(mesh, g, quad=None):
    """Vector of ``integral(g * phi_i)`` over all vertices."""
    quad = quad or quadrature(5)
    pts = quad.physical_points(mesh)
    vals = np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    bad = ~np.isfinite(vals)
    if bad.any():
        t = int(np.flatnonzero(bad.any(axis=1))[0])
        raise NumericalError(f"non-finite data at a quadrature node of element {t}",
                             module="fem")
    local = mesh.areas[:, None] * (vals * quad.weights) @ quad.points
    return np.bincount(mesh.elements.ravel(), weights=local.ravel(),
                       minlength=mesh.num_vertices)


def element_l2_norms(mesh, values_at_quad, quad):
    """Per-element L2 norms of data given at the quadrature nodes."""
    return np.sqrt(mesh.areas * (values_at_quad ** 2 @ quad.weights))


def solve_spd(matrix, rhs, tol=1e-10, method="direct", maxiter=None):
    """Solve ``matrix @ x = rhs`` to relative residual ``tol``.

    ``method`` is ``"direct"`` (sparse LU) or ``"cg"`` (Jacobi-preconditioned
    conjugate gradients).
    """
    A = sp.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] == 0:
        return np.zeros(0)
    if method == "direct":
        x = spla.spsolve(A.tocsc(), b)
        x = np.atleast_1d(x)
    elif method == "cg":
        d = A.diagonal()
        if np.any(d <= 0.0):
            raise NumericalError("matrix is not positive definite", module="fem")
        prec = spla.LinearOperator(A.shape, matvec=lambda v: v / d)
        x, info = spla.cg(A, b, rtol=tol, atol=0.0, M=prec,
                          maxiter=maxiter or 10 * A.shape[0])
        if info != 0:
            res = _relres(A, x, b)
            raise NumericalError(f"CG did not converge (residual {res:.2e})",
                                 module="fem", residual=res)
    else:
        raise InputError(f"unknown solver method {method!r}", module="fem")
    res = _relres(A, x, b)
    if not np.isfinite(res) or res > tol:
        raise NumericalError(f"linear solve residual {res:.2e} above {tol:.1e}",
                             module="fem", residual=res)
    return x


def _relres(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


@dataclass(frozen=True, eq=False)
class FeFunction:
    """Nodal P1 coefficients bound to one mesh."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.mesh.num_vertices,):
            raise InputError("nodal vector length does not match the mesh",
                             module="fem")
        object.__setattr__(self, "values", v)

    @property
    def mesh_id(self):
        return self.mesh.mesh_id

    def is_dirichlet_conforming(self):
        return bool(np.all(self.values[self.mesh.boundary] == 0.0))

    @classmethod
    def interpolate(cls, mesh, g):
        return cls(mesh, np.asarray(g(mesh.vertices), dtype=float))

    @classmethod
    def from_interior(cls, mesh, interior_values):
        v = np.zeros(mesh.num_vertices)
        v[mesh.interior_vertices] = interior_values
        return cls(mesh, v)


def nodal(fe):
    """Nodal vector of an FeFunction or array."""
    return np.asarray(getattr(fe, "values", fe), dtype=float)


def barycentric_coordinates(mesh, t, x):
    v = mesh.vertices[mesh.elements[t]]
    T = np.column_stack([v[1] - v[0], v[2] - v[0]])
    l12 = np.linalg.solve(T, np.asarray(x, dtype=float) - v[0])
    return np.array([1.0 - l12.sum(), l12[0], l12[1]])


def evaluate_in_element(mesh, fe, t, x):
    lam = barycentric_coordinates(mesh, t, x)
    return float(lam @ nodal(fe)[mesh.elements[t]])


def locate(mesh, x, tol=1e-12):
    """All elements whose closure contains point ``x``."""
    x = np.asarray(x, dtype=float)
    v = mesh.vertices[mesh.elements]
    d1, d2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    r = x - v[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    l1 = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / det
    l2 = (d1[:, 0] * r[:, 1] - d1[:, 1] * r[:, 0]) / det
    inside = (l1 >= -tol) & (l2 >= -tol) & (1.0 - l1 - l2 >= -tol)
    return np.flatnonzero(inside)


def evaluate(mesh, fe, x):
    """Value of the P1 function at point ``x``."""
    hits = locate(mesh, x)
    if hits.size == 0:
        raise DomainError(f"point {tuple(np.asarray(x))} lies outside the mesh",
                          module="fem")
    return evaluate_in_element(mesh, fe, int(hits[0]), x)


def lattice(order):
    """Barycentric points (i/k, j/k, l/k) with i + j + l = k."""
    if order < 1:
        raise InputError("sample order must be >= 1", module="fem")
    pts = [(i, j, order - i - j) for i in range(order + 1) for j in range(order + 1 - i)]
    return np.array(pts, dtype=float) / order


def linf_distance_sampled(mesh, fe, g, sample_order=4):
    """Max of ``|fe - g|`` on the order-k lattice of each element.

    Returns ``(per_element, global_max)``. This is a lower bound of the true
    supremum; the lattice always contains the vertices.
    """
    lam = lattice(sample_order)
    pts = np.einsum("qk,tkd->tqd", lam, mesh.vertices[mesh.elements])
    fe_vals = nodal(fe)[mesh.elements] @ lam.T
    g_vals = np.asarray(g(pts.reshape(-1, 2)), dtype=float).reshape(fe_vals.shape)
    per_element = np.abs(fe_vals - g_vals).max(axis=1)
    return per_element, float(per_element.max())
