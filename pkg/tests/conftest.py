import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def verdict(request):
    """Record and print one acceptance line; the summary hook repeats it."""
    def record(number, title, ok, detail=""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f": {detail}" if detail else "")
        print(line)
        request.node.user_properties.append(("acceptance", (number, line)))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    lines = [v for r in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", [])
             if r.when == "call" for k, v in r.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
