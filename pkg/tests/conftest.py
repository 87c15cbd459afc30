"""Shared fixtures: the reference experiment, small meshes, canned chains.

Also hosts the acceptance-criteria recorder: tests in test_acceptance.py
register one verdict per criterion, and the terminal summary prints a
PASS/FAIL line for each (mirrored to acceptance_report.txt).
"""

from pathlib import Path

import numpy as np
import pytest

from heatbayes import (
    CubicByCoefficients,
    Mesh,
    PhysicalConfig,
    nondimensionalize,
)

# --- acceptance criteria recorder ---------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    lines = []
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        suffix = f" [{detail}]" if detail else ""
        lines.append(f"{verdict}  criterion {number:2d}: {title}{suffix}")
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
    report_path = Path(config.rootpath) / "acceptance_report.txt"
    report_path.write_text("\n".join(lines) + "\n")

# Reference dimensional setup used throughout: a 1 cm steel slab heated at
# 5e5 W/m^2 on the left, convecting into 300 K ambient on the right,
# sampled every 0.2 s for 600 s.
REFERENCE_PHYSICAL = dict(
    length=0.01,
    t0=300.0,
    flux=5e5,
    h=600.0,
    t_inf=300.0,
    rho=7870.0,
    cp=486.0,
    dt=0.2,
    duration=600.0,
)

# Cubic ground truth for the dimensionless conductivity.
TRUTH_COEFFICIENTS = np.array([0.0810, -0.4860, 0.0918, 4.2060])


@pytest.fixture(scope="session")
def physical():
    return PhysicalConfig(**REFERENCE_PHYSICAL)


@pytest.fixture(scope="session")
def dimensionless(physical):
    problem, grid = nondimensionalize(physical)
    return problem, grid


@pytest.fixture(scope="session")
def problem(dimensionless):
    return dimensionless[0]


@pytest.fixture(scope="session")
def grid(dimensionless):
    return dimensionless[1]


@pytest.fixture(scope="session")
def mesh():
    return Mesh(5)


@pytest.fixture(scope="session")
def truth_model():
    return CubicByCoefficients(TRUTH_COEFFICIENTS.copy())
