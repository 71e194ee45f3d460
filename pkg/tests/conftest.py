import sys

import pytest

from spheremass.modified_ricci_flow import run_flow
from spheremass.sphere_geometry import AxisymMetric, normalize_area


@pytest.fixture(scope="session")
def round_trace():
    return run_flow(AxisymMetric.round(64), 20.0)


@pytest.fixture(scope="session")
def ellipsoid_trace():
    return run_flow(normalize_area(AxisymMetric.ellipsoid(128, (1, 1, 0.8))), 20.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(results):
        terminalreporter.write_line(line)
