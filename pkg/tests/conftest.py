import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

# first calls pay for numba compilation and dictionary loading
settings.register_profile("default", deadline=None)
settings.load_profile("default")


_CRITERIA: dict = {}
_OUTCOMES: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _CRITERIA[item.nodeid] = m.args[0]


def pytest_runtest_logreport(report):
    n = _CRITERIA.get(report.nodeid)
    if n is None:
        return
    ok = report.passed or (report.when != "call" and not report.failed)
    if report.when == "call" or report.failed:
        _OUTCOMES[n] = _OUTCOMES.get(n, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if _OUTCOMES[n] else 'FAIL'}")
