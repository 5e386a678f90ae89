import math

import numpy as np
import pytest
from scipy import integrate

from linfocp import fem
from linfocp.errors import DomainError, InputError, NumericalError
from linfocp.mesh import Mesh, initial_lshape_mesh, refine_uniform, unit_square_mesh

from conftest import random_refinement
from oracles import symbolic_local_matrices


def one_triangle(v):
    return Mesh.from_arrays(np.asarray(v, float), [[0, 1, 2]])


@pytest.mark.parametrize("verts", [
    [(0, 0), (1, 0), (0, 1)],
    [(0.1, -0.2), (1.3, 0.25), (0.4, 0.9)],
    [(-1, -1), (0.5, -0.75), (-0.125, 2)],
])
def test_local_matrices_match_symbolic(verts):
    K, M, exact_verts = symbolic_local_matrices(verts)
    m = one_triangle(exact_verts)
    assert np.abs(fem.local_stiffness(m)[0] - K).max() <= 1e-14
    assert np.abs(fem.local_mass(m)[0] - M).max() <= 1e-14


def test_reference_values():
    m = one_triangle([(0, 0), (1, 0), (0, 1)])
    K = fem.local_stiffness(m)[0]
    assert np.allclose(K, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)
    assert np.allclose(fem.local_mass(m)[0], (np.ones((3, 3)) + np.eye(3)) / 24)


def test_global_matrix_properties(lmesh, rng):
    m = random_refinement(lmesh, rng, 3)
    A = fem.assemble_stiffness(m, full=True)
    assert abs(A - A.T).max() < 1e-14
    assert np.abs(A @ np.ones(m.num_vertices)).max() < 1e-12
    M, lumped = fem.assemble_mass(m)
    assert M.sum() == pytest.approx(3.0)
    assert np.allclose(lumped, np.asarray(M.sum(axis=1)).ravel())
    Ai = fem.assemble_stiffness(m).toarray()
    assert np.linalg.eigvalsh(Ai).min() > 0


def test_crisscross_centre_diagonal():
    m = unit_square_mesh()
    A = fem.assemble_stiffness(m)
    assert A.shape == (1, 1)
    assert A[0, 0] == pytest.approx(4.0)


def test_poisson_centre_value():
    m = unit_square_mesh()
    A = fem.assemble_stiffness(m)
    F = fem.assemble_load(m, lambda x: np.ones(len(x)))[m.interior_vertices]
    y = fem.solve_spd(A, F)
    assert y[0] == pytest.approx(1.0 / 12.0, abs=1e-15)


@pytest.mark.parametrize("rule", [fem.quadrature(5), fem.collapsed_gauss(9)])
def test_quadrature_monomials(rule):
    # integral of x^i y^j over the unit triangle = i! j! / (i + j + 2)!
    pts = rule.points[:, 1:]
    assert rule.weights.sum() == pytest.approx(1.0)
    for i in range(rule.degree + 1):
        for j in range(rule.degree + 1 - i):
            exact = math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
            got = 0.5 * rule.weights @ (pts[:, 0] ** i * pts[:, 1] ** j)
            assert got == pytest.approx(exact, rel=1e-13, abs=1e-16)


def test_quadrature_degree_selection():
    assert fem.quadrature(2).degree == 5
    assert fem.quadrature(8).degree == 8
    with pytest.raises(InputError):
        fem.quadrature(-1)


def test_load_vector_against_dblquad():
    v = np.array([(0.2, 0.1), (1.1, 0.3), (0.5, 1.2)])
    m = one_triangle(v)
    g = lambda x: 1 + x[..., 0] ** 2 * x[..., 1] - 3 * x[..., 1] ** 4
    F = fem.assemble_load(m, g)
    T = np.column_stack([v[1] - v[0], v[2] - v[0]])
    det = abs(np.linalg.det(T))
    for i in range(3):
        def integrand(t, r):
            x = v[0] + T @ np.array([r, t])
            lam = [1 - r - t, r, t][i]
            return g(x) * lam * det
        ref, _ = integrate.dblquad(integrand, 0, 1, 0, lambda r: 1 - r,
                                   epsabs=1e-14, epsrel=1e-14)
        assert F[i] == pytest.approx(ref, rel=1e-12)


def test_load_rejects_non_finite(lmesh):
    with pytest.raises(NumericalError):
        fem.assemble_load(lmesh, lambda x: np.full(len(x), np.nan))


def test_solvers_agree(lmesh, rng):
    m = random_refinement(lmesh, rng, 4)
    A = fem.assemble_stiffness(m)
    b = rng.standard_normal(A.shape[0])
    x1 = fem.solve_spd(A, b, method="direct")
    x2 = fem.solve_spd(A, b, tol=1e-12, method="cg")
    assert np.abs(x1 - x2).max() < 1e-8 * np.abs(x1).max()
    with pytest.raises(InputError):
        fem.solve_spd(A, b, method="magic")


def test_point_evaluation(lmesh, rng):
    m = random_refinement(lmesh, rng, 2)
    g = lambda x: 3 * np.asarray(x)[..., 0] - np.asarray(x)[..., 1] + 0.5
    fe = fem.FeFunction.interpolate(m, g)
    for x in rng.uniform(-1, 0, (20, 2)):
        assert fem.evaluate(m, fe, x) == pytest.approx(g(x))
    # continuity across elements sharing a vertex
    f2 = fem.FeFunction(m, rng.random(m.num_vertices))
    x = m.vertices[m.elements[0, 0]]
    values = {round(fem.evaluate_in_element(m, f2, t, x), 12) for t in fem.locate(m, x)}
    assert len(values) == 1
    with pytest.raises(DomainError):
        fem.evaluate(m, fe, (0.5, -0.5))


def test_fe_function_checks(lmesh):
    with pytest.raises(InputError):
        fem.FeFunction(lmesh, np.zeros(3))
    fe = fem.FeFunction.from_interior(lmesh, np.ones(len(lmesh.interior_vertices)))
    assert fe.is_dirichlet_conforming()
    assert fe.mesh_id == lmesh.mesh_id
    assert not fem.FeFunction(lmesh, np.ones(11)).is_dirichlet_conforming()


def test_lattice_sampling_of_interpolation_error():
    m = one_triangle([(0, 0), (1, 0), (0, 1)])
    g = lambda x: np.asarray(x)[..., 0] ** 2
    fe = fem.FeFunction.interpolate(m, g)
    _, got = fem.linf_distance_sampled(m, fe, g, 4)
    rng = np.random.default_rng(2)
    r = rng.random((10_000, 2))
    r = np.where(r.sum(axis=1, keepdims=True) > 1, 1 - r, r)
    dense = np.abs(r[:, 0] - r[:, 0] ** 2).max()
    assert got == pytest.approx(0.25)
    assert dense <= got + 1e-15 and got - dense < 1e-3
    assert len(fem.lattice(4)) == 15
    with pytest.raises(InputError):
        fem.lattice(0)


def test_smooth_poisson_converges_in_max_norm():
    y = lambda x: np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])
    f = lambda x: 2 * np.pi ** 2 * y(x)
    errs, hs = [], []
    m = refine_uniform(unit_square_mesh(), 4)
    for _ in range(4):
        A = fem.assemble_stiffness(m)
        F = fem.assemble_load(m, f)[m.interior_vertices]
        fe = fem.FeFunction.from_interior(m, fem.solve_spd(A, F))
        errs.append(fem.linf_distance_sampled(m, fe, y, 4)[1])
        hs.append(m.diameters.max())
        m = refine_uniform(m, 2)
    rates = np.diff(np.log(errs)) / np.diff(np.log(hs))
    assert rates[-1] > 1.8
