import numpy as np
import pytest

from optolie.propagators import SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cavity():
    """Cavity/mechanics frequencies used by the driven scenarios."""
    return SystemParams(omega_c=10.0, omega_m=1.0, g0=0.1, g1=0.01)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; lines are echoed
    immediately and collected again in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(label: str, ok: bool, detail: str):
        line = f"{label:<34s} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
