import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test marks it passed by calling ``ok(detail)``."""
    entry = {"name": request.node.name, "passed": False, "detail": ""}
    _ACCEPTANCE.append(entry)

    def ok(detail=""):
        entry["passed"] = True
        entry["detail"] = detail

    yield ok


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _ACCEPTANCE:
        status = "PASS" if entry["passed"] else "FAIL"
        terminalreporter.write_line(f"{status} {entry['name']} {entry['detail']}".rstrip())
