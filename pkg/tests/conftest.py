"""Shared fixtures.  Meshes and solves are session scoped: they are pure
functions of their arguments, so every test file reuses the same objects."""

import numpy as np
import pytest

from pxthin import EnergySetup, ExponentField, ObstacleProblem, build, solve

CRITERION_LINES = []


def record_criterion(number, passed, detail):
    """One pass/fail line per acceptance criterion, shown in the summary."""
    line = "CRITERION %2d: %s  %s" % (number, "PASS" if passed else "FAIL", detail)
    CRITERION_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)


def g_signorini32(mesh):
    # arc data r^{3/2} cos(3 theta / 2); vanishing normal trace at theta = pi
    x = mesh.vertices
    r = np.hypot(x[:, 0], x[:, 1])
    theta = np.arctan2(x[:, 1], x[:, 0])
    return r ** 1.5 * np.cos(1.5 * theta)


@pytest.fixture(scope="session")
def mesh3():
    return build(3)


@pytest.fixture(scope="session")
def mesh4():
    return build(4)


@pytest.fixture(scope="session")
def mesh5():
    return build(5)


@pytest.fixture(scope="session")
def mesh6():
    return build(6)


@pytest.fixture(scope="session")
def mesh7():
    return build(7)


@pytest.fixture(scope="session")
def p2():
    return ExponentField("constant", [2.0])


@pytest.fixture(scope="session")
def sin_field():
    return ExponentField("sinusoidal", [2.0, 0.5, np.pi])


@pytest.fixture(scope="session")
def solved_p2_sig32_l5(mesh5, p2):
    g = g_signorini32(mesh5)
    problem = ObstacleProblem(EnergySetup(mesh5, p2), g)
    u, report = solve(problem, 1e-10)
    return problem, u, report, g


@pytest.fixture(scope="session")
def solved_p2_sig32_l6(mesh6, p2):
    g = g_signorini32(mesh6)
    problem = ObstacleProblem(EnergySetup(mesh6, p2), g)
    u, report = solve(problem, 1e-10)
    return problem, u, report, g


@pytest.fixture(scope="session")
def solved_sin_sig32_l6(mesh6, sin_field):
    g = g_signorini32(mesh6)
    problem = ObstacleProblem(EnergySetup(mesh6, sin_field), g)
    u, report = solve(problem, 1e-10)
    return problem, u, report, g
