import numpy as np
import pytest

from toposhape.grid import GridSpec, ScalarField
from toposhape.redistance import reinitialize


def circle_sdf(radius=2.0, h=0.05, span=3.0, center=(0.0, 0.0)):
    """Exact signed distance of a disk sampled on a square grid (positive inside)."""
    spec = GridSpec.covering(-span, span, -span, span, h)
    cx, cy = center
    return ScalarField.from_function(spec, lambda x, y: radius - np.hypot(x - cx, y - cy))


def circle_level_set(radius=2.0, h=0.05, band=0.9, span=None):
    span = span if span is not None else radius + band + 1.0
    return reinitialize(circle_sdf(radius, h, span), band)


@pytest.fixture(scope="session")
def circle_r2():
    """Reinitialized circle R=2 at h=0.05, band wide enough for d=l=0.5 probes."""
    return circle_level_set(2.0, 0.05, 0.9)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """``report(n, title, ok, detail)`` logs one PASS/FAIL line per criterion."""
    def report(n, title, ok, detail=""):
        line = f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES[n] = line
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
