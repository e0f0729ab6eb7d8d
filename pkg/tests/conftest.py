import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from superosc import NodeSpec, PrecisionContext, synthesize  # noqa: E402
from superosc.prolate import alternating  # noqa: E402


@pytest.fixture(scope="session")
def ctx256():
    return PrecisionContext(256)


@pytest.fixture(scope="session")
def five_nodes():
    """N=5, dx=0.1, p_max=pi, hbar=1, alternating amplitudes."""
    ctx = PrecisionContext.auto(5, 0.05)
    return NodeSpec.equispaced(5, "0.1", alternating(5), "pi", 1, ctx)


@pytest.fixture(scope="session")
def psi5(five_nodes):
    return synthesize(five_nodes)


@pytest.fixture(scope="session")
def ten_nodes():
    ctx = PrecisionContext.auto(10, 0.05)
    return NodeSpec.equispaced(10, "0.1", alternating(10), "pi", 1, ctx)


@pytest.fixture(scope="session")
def psi10(ten_nodes):
    return synthesize(ten_nodes)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
