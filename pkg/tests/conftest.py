import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tricrit.models import AqrmParams

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

OMEGA, W = 2.5e5, 0.25


@pytest.fixture
def main_base():
    return AqrmParams(OMEGA, W)


def np_grid(n=20, margin=0.02):
    """Points (s1, s2) strictly inside the normal phase with the given margin in units of gc."""
    s = np.linspace(-1 + margin, 1 - margin, n)
    pts = []
    for a in s:
        for b in s:
            if abs(a + b) < 1 - margin and abs(a - b) < 1 - margin:
                pts.append((float(a), float(b)))
    return pts


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
