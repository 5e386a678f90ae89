import numpy as np
import pytest

from linfocp import _backend, mesh as meshmod


@pytest.fixture(params=_backend.available_backends())
def backend(request, monkeypatch):
    """Run a test once per importable kernel backend."""
    k = _backend.load_backend(request.param)
    monkeypatch.setattr(meshmod, "kernels", k)
    from linfocp import estimator
    monkeypatch.setattr(estimator, "kernels", k)
    return k


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def lmesh():
    return meshmod.initial_lshape_mesh()


def random_refinement(mesh, rng, steps, fraction=0.2):
    for _ in range(steps):
        k = max(1, int(fraction * mesh.num_elements))
        mesh = meshmod.refine(mesh, rng.choice(mesh.num_elements, k, replace=False))
    return mesh


# one summary line per acceptance criterion, filled by test_acceptance.py
CRITERIA = {}


def record_criterion(number, passed, detail):
    CRITERIA[number] = (passed, detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
