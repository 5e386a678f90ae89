"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the
``acceptance criteria`` section of the pytest terminal summary.
"""
import filecmp

import numpy as np
import pytest

from linfocp import benchmark, cli, estimator, fem, ocp
from linfocp.adaptive import AdaptiveConfig, adaptive_loop, fit_rate
from linfocp.mesh import (Mesh, build_side_table, initial_lshape_mesh, refine_uniform)

from conftest import random_refinement, record_criterion
from oracles import (dense_kkt_unconstrained, projected_fixed_point, random_gap_cases,
                     richardson_laplacian, symbolic_local_matrices)

RATE_WINDOW = 10
OPTIMAL_RATE_BAND = (-1.15, -0.85)
UNIFORM_RATE_FLOOR = -0.55
EFFECTIVITY_SPREAD = 10.0
EFFECTIVITY_FROM = 6
PYTHAGORAS_RTOL = 1e-12
VI_FLOOR = -1e-9
ORACLE_TOL = 1e-8
SMOOTH_ERR_Y_RATE = -0.9


class Invariants:
    """Per-iteration checks gathered through the adaptive-loop callback."""

    def __init__(self, bm):
        self.bm = bm
        self.local = []
        self.globl = []
        self.vi = []
        self.compl = []

    def __call__(self, it, mesh, sol, ind):
        parts = ind.e_y ** 2 + ind.e_p ** 2 + ind.e_u ** 2
        scale = np.maximum(ind.e_total ** 2, np.finfo(float).tiny)
        self.local.append(float(np.max(np.abs(ind.e_total ** 2 - parts) / scale)))
        g = ind.est_y ** 2 + ind.est_p ** 2 + ind.est_u ** 2
        self.globl.append(abs(ind.est_total ** 2 - g) / ind.est_total ** 2)
        prob = self.bm.problem(mesh)
        self.vi.append(ocp.vi_residual(sol, prob))
        self.compl.append(ocp.complementarity_violation(sol, prob))


@pytest.fixture(scope="module")
def adaptive_run():
    bm = benchmark.get_benchmark("lshape-paper", lam=1.0)
    inv = Invariants(bm)
    res = adaptive_loop(bm.problem(initial_lshape_mesh()),
                        AdaptiveConfig(theta=0.5, max_ndof=100_000),
                        truth=bm.exact, callback=inv)
    return res, inv


@pytest.fixture(scope="module")
def uniform_run():
    bm = benchmark.get_benchmark("lshape-paper", lam=1.0)
    return adaptive_loop(bm.problem(), AdaptiveConfig(mode="uniform", max_ndof=30_000),
                         truth=bm.exact)


def test_criterion_1_optimal_adaptive_rate(adaptive_run):
    res, _ = adaptive_run
    rec = res.record
    assert rec.rows[0].elements == 12 and rec.rows[-1].ndof >= 100_000
    lo, hi = OPTIMAL_RATE_BAND
    est = fit_rate(rec, "est_total", RATE_WINDOW)
    err = fit_rate(rec, "err_total", RATE_WINDOW)
    ok = lo <= est <= hi and lo <= err <= hi
    record_criterion(1, ok, f"est_total slope {est:.3f}, err_total slope {err:.3f}, "
                            f"band [{lo}, {hi}], final Ndof {rec.rows[-1].ndof}")
    assert lo <= est <= hi, f"est_total slope {est:.4f}"
    assert lo <= err <= hi, f"err_total slope {err:.4f}"


def test_criterion_2_adaptive_beats_uniform(adaptive_run, uniform_run):
    adaptive_slope = fit_rate(adaptive_run[0].record, "err_total", RATE_WINDOW)
    uni = fit_rate(uniform_run.record, "err_total", RATE_WINDOW)
    ok = uni >= UNIFORM_RATE_FLOOR and uni > adaptive_slope
    record_criterion(2, ok, f"uniform err_total slope {uni:.3f} (need >= "
                            f"{UNIFORM_RATE_FLOOR}), adaptive {adaptive_slope:.3f}, "
                            f"uniform final Ndof {uniform_run.record.rows[-1].ndof}")
    assert uni >= UNIFORM_RATE_FLOOR, f"uniform slope {uni:.4f}"
    assert uni > adaptive_slope


def test_criterion_3_effectivity_is_stable(adaptive_run):
    rows = adaptive_run[0].record.rows[EFFECTIVITY_FROM:]
    eff = np.array([benchmark.effectivity(r) for r in rows])
    spread = eff.max() / eff.min()
    ok = bool(np.all(np.isfinite(eff))) and spread <= EFFECTIVITY_SPREAD
    record_criterion(3, ok, f"effectivity in [{eff.min():.2f}, {eff.max():.2f}], "
                            f"ratio {spread:.2f} over {len(rows)} iterations")
    assert ok


def test_criterion_4_pythagorean_identities(adaptive_run):
    _, inv = adaptive_run
    worst_local, worst_global = max(inv.local), max(inv.globl)
    ok = worst_local <= PYTHAGORAS_RTOL and worst_global <= PYTHAGORAS_RTOL
    record_criterion(4, ok, f"max relative defect local {worst_local:.1e}, "
                            f"global {worst_global:.1e}")
    assert ok


def _small_mesh_oracle_gap():
    bm = benchmark.get_benchmark("lshape-paper")
    mesh = refine_uniform(initial_lshape_mesh(), 2)
    assert mesh.num_vertices <= 50
    idx = mesh.interior_vertices
    gaps = []
    wide = ocp.OcpProblem(bm.f, bm.y_omega, 1.0, -1e6, 1e6, mesh)
    sol = ocp.solve_ocp(wide)
    _, _, u = dense_kkt_unconstrained(ocp.DiscreteSystem.assemble(wide), 1.0)
    gaps.append(np.abs(sol.u.values[idx] - u).max())
    for lam, a, b in ((1.0, 0.0, 1.0), (0.5, -0.3, 0.2)):
        prob = ocp.OcpProblem(bm.f, bm.y_omega, lam, a, b, mesh)
        sol = ocp.solve_ocp(prob)
        _, _, u = projected_fixed_point(ocp.DiscreteSystem.assemble(prob), lam, a, b)
        gaps.append(np.abs(sol.u.values[idx] - u).max())
    return max(gaps)


def test_criterion_5_discrete_optimality(adaptive_run):
    _, inv = adaptive_run
    worst_vi, worst_compl = min(inv.vi), max(inv.compl)
    gap = _small_mesh_oracle_gap()
    ok = worst_vi >= VI_FLOOR and worst_compl <= -VI_FLOOR and gap <= ORACLE_TOL
    record_criterion(5, ok, f"min vi_residual {worst_vi:.1e}, max complementarity "
                            f"violation {worst_compl:.1e}, oracle gap {gap:.1e}")
    assert ok


def test_criterion_6_oracle_suites():
    checks = {}
    worst = 0.0
    for verts in ([(0, 0), (1, 0), (0, 1)], [(0.1, -0.2), (1.3, 0.25), (0.4, 0.9)]):
        K, M, v = symbolic_local_matrices(verts)
        m = Mesh.from_arrays(v, [[0, 1, 2]])
        worst = max(worst, np.abs(fem.local_stiffness(m)[0] - K).max(),
                    np.abs(fem.local_mass(m)[0] - M).max())
    checks["local matrices"] = worst <= 1e-14

    rng = np.random.default_rng(1)
    m = random_refinement(initial_lshape_mesh(), rng, 4)
    lin = fem.FeFunction.interpolate(m, lambda x: 0.3 + 2 * x[:, 0] - x[:, 1])
    checks["linear jumps"] = np.abs(estimator.side_jumps(m, build_side_table(m), lin)).max() < 1e-12

    w, u, dense = random_gap_cases()
    from linfocp._backend import kernels
    checks["E_u candidate rule"] = np.abs(kernels.clamp_gap_sup(w, u, 0.0, 1.0) - dense).max() <= 1e-10

    x, y = rng.normal(0, 2, (2, 100_000))
    checks["clamp nonexpansive"] = bool(np.all(
        np.abs(ocp.clamp_projection(x, 0.0, 1.0) - ocp.clamp_projection(y, 0.0, 1.0))
        <= np.abs(x - y)))

    bm = benchmark.get_benchmark("lshape-paper")
    pts = []
    while len(pts) < 100:
        p = rng.uniform(-0.95, 0.95, 2)
        if not (p[0] > -0.05 and p[1] < 0.05) and np.hypot(*p) > 0.1:
            pts.append(p)
    pts = np.array(pts)
    f, yo = bm.manufactured_data(pts)
    f_fd = -richardson_laplacian(bm.y, pts) - bm.u(pts)
    yo_fd = bm.y(pts) + richardson_laplacian(bm.p, pts)
    rel = max(np.abs(f - f_fd).max() / np.abs(f_fd).max(),
              np.abs(yo - yo_fd).max() / np.abs(yo_fd).max())
    checks["FD Laplacian"] = rel <= 1e-6

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    record_criterion(6, ok, "all oracle suites agree" if ok else f"failed: {failed}")
    assert ok, failed


def test_criterion_7_smooth_validation():
    bm = benchmark.get_benchmark("square-smooth")
    res = adaptive_loop(bm.problem(), AdaptiveConfig(mode="uniform", max_ndof=100_000),
                        truth=bm.exact)
    rate = fit_rate(res.record, "err_y", RATE_WINDOW)
    ok = rate <= SMOOTH_ERR_Y_RATE
    record_criterion(7, ok, f"square-smooth uniform err_y slope {rate:.3f} "
                            f"(need <= {SMOOTH_ERR_Y_RATE})")
    assert ok


def test_criterion_8_determinism(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert cli.main(["--max-ndof", "20000", "--vtk-every", "-1", "--out", str(out)]) == 0
    same = filecmp.cmp(outs[0] / "history.csv", outs[1] / "history.csv", shallow=False)
    record_criterion(8, same, "history.csv byte-identical across two runs"
                     if same else "history.csv differs between runs")
    assert same
