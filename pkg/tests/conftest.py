import pytest

from jacobi_needlets.setting import JacobiSetting

SETTINGS = [(0.0, 0.0), (0.5, 0.5), (-0.3, 0.7)]


@pytest.fixture(params=SETTINGS, ids=lambda ab: f"a{ab[0]}_b{ab[1]}")
def setting(request):
    return JacobiSetting(*request.param)


@pytest.fixture
def legendre():
    return JacobiSetting(0.0, 0.0)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    """Record one summary line per acceptance criterion."""
    def record(number, passed, detail):
        _ACCEPTANCE_LINES.append((number, passed, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE_LINES, key=lambda r: (int(str(r[0]).split("/")[0]), str(r[0]))):
        terminalreporter.write_line(f"criterion {str(number):<22} {'PASS' if passed else 'FAIL'}  {detail}")
