"""Shared fixtures and the acceptance-suite reporter.

Every test in test_acceptance.py gets one ACCEPTANCE: <name>: PASSED/FAILED
line in the terminal summary so the criteria can be audited at a glance.
"""

from __future__ import annotations

import numpy as np
import pytest

from cobot_rehab import SubjectProfile, Trajectory

# nodeid -> "PASSED" | "FAILED" | "SKIPPED", in run order; failures sticky
_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report: pytest.TestReport) -> None:
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.failed:
        _acceptance[name] = "FAILED"
    elif report.skipped:
        _acceptance.setdefault(name, "SKIPPED")
    elif report.when == "call" and _acceptance.get(name) != "FAILED":
        _acceptance[name] = "PASSED"


def pytest_terminal_summary(terminalreporter, exitstatus: int, config) -> None:
    if not _acceptance:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _acceptance.items():
        terminalreporter.write_line(f"ACCEPTANCE: {name}: {status}")


# -- shared builders -----------------------------------------------------------


def line_trajectory(
    start=(0.0, 0.0, 0.0), end=(0.1, 0.0, 0.0), duration: float = 10.0, n: int = 101
) -> Trajectory:
    t = np.linspace(0.0, duration, n)
    u = t / duration
    pos = np.outer(1 - u, start) + np.outer(u, end)
    return Trajectory.from_arrays(t, pos)


@pytest.fixture
def permissive_profile() -> SubjectProfile:
    """Subject whose ROM dwarfs every built-in task: never resists, never stops."""
    return SubjectProfile(
        rom_center=(0.0, 0.0, 0.0),
        rom_radii=(5.0, 5.0, 5.0),
        stiffness_k=100.0,
        comfort_margin=0.9,
        stop_threshold=10.0,
        mvic={"biceps-brachii": 350.0},
    )
