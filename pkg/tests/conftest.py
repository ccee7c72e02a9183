import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.fixture
def measured(request):
    """Attach measured values to the acceptance line of the running test."""
    details = []
    request.node._criterion_details = details

    def note(text):
        details.append(text)
        print(text)

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    num, title = mark.args
    details = getattr(item, "_criterion_details", [])
    _CRITERIA[num] = ("PASS" if rep.passed else "FAIL", title, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        status, title, details = _CRITERIA[num]
        terminalreporter.write_line(f"{status} criterion {num}: {title}" + (f" | {details}" if details else ""))
