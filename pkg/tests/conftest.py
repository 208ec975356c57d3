import numpy as np
import pytest

from qflow import problem, solver

_ACCEPTANCE = []


@pytest.fixture
def verdict(capsys):
    """Record and echo one PASS/FAIL line per acceptance criterion."""

    def emit(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def positive_solve():
    spec = problem.make_problem(1, np.pi**2, "2 0 0 1; 0 2 0 1; 0 0 2 1", L=64, zonal=True)
    fields = problem.assemble_sphere_fields(spec)
    state = solver.minimize(spec, fields)
    return spec, fields, state


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)
