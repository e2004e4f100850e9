"""Shared fixtures: small EFIE sphere systems assembled once per session."""

from dataclasses import dataclass

import numpy as np
import pytest

from efie_hybrid.farfield import mie_rcs
from efie_hybrid.mesh import build_rwg, generate_sphere
from efie_hybrid.mom import BackgroundMedium, PlaneWave, assemble_system, realify

FREQ = 300e6


@dataclass
class SphereCase:
    level: int
    mesh: object
    rwg: object
    complex_system: object
    system: object
    x_direct: np.ndarray
    medium: BackgroundMedium
    mie: object


def _sphere_case(level: int) -> SphereCase:
    medium = BackgroundMedium()
    mesh = generate_sphere(1.0, level)
    rwg = build_rwg(mesh)
    csys = assemble_system(mesh, rwg, PlaneWave(FREQ), medium)
    rsys = realify(csys)
    x = np.linalg.solve(rsys.A, rsys.b)
    return SphereCase(level, mesh, rwg, csys, rsys, x, medium, mie_rcs(1.0, medium, FREQ))


@pytest.fixture(scope="session")
def sphere1() -> SphereCase:
    return _sphere_case(1)


@pytest.fixture(scope="session")
def sphere2() -> SphereCase:
    return _sphere_case(2)


def random_spd(n: int, rng: np.random.Generator, cond: float = 10.0) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * np.geomspace(1.0, cond, n)) @ Q.T


def fidelity(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


# -- acceptance reporting and opt-in slow checks ----------------------------------

_ACCEPTANCE = []


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", help="run full-size mesh checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="full-size mesh check; pass --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def report(capsys):
    """Record and print one acceptance line; returns ``ok`` for asserting."""
    def _report(criterion, ok, detail):
        line = f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
