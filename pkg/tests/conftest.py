import numpy as np
import pytest

from hitchinq.oper import OperConfig

_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``report(number, name, ok, detail)`` records one criterion line."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(number, name, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def symmetric4():
    """Real-symmetric configuration used for the spectrum."""
    return OperConfig.from_arrays(1.0, [0, 1, 2, 3], [0.1] * 4)
