import pytest

_RESULTS = {}


@pytest.fixture(scope="session")
def record():
    """record(key, ok, note) stores one acceptance line for the terminal summary."""

    def _record(key, ok, note=""):
        _RESULTS[key] = (ok, note)

    return _record


def _order(key):
    num, _, suffix = str(key).partition("/")
    return int(num), suffix


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=_order):
        ok, note = _RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {note}")
