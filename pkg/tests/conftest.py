import numpy as np
import pytest

_ACCEPTANCE_LINES = []


class AcceptanceRecorder:
    def __init__(self, criterion: int, title: str):
        self.criterion = criterion
        self.title = title

    def check(self, ok: bool, detail: str) -> None:
        status = "PASS" if ok else "FAIL"
        line = f"criterion {self.criterion:>2} {status}  {self.title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line


@pytest.fixture
def acceptance(request):
    marker = request.node.get_closest_marker("criterion")
    return AcceptanceRecorder(*marker.args)


@pytest.fixture
def rng():
    return np.random.default_rng(20040321)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
