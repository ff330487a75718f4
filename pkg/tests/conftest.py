import re

import pytest

from integral_gp import repro

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(v for k, v in item.user_properties if k == "measured")
        _CRITERIA[item.nodeid] = (mark.args[0], mark.args[1], rep.outcome, detail)


def _order(row):
    m = re.match(r"(\d+)(.*)", str(row[0]))
    return int(m.group(1)), m.group(2)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title, outcome, detail in sorted(_CRITERIA.values(), key=_order):
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"criterion {number:<4} {status:<5} {title}"
        if detail:
            line += f"  [{detail}]"
        tr.write_line(line)


@pytest.fixture
def measured(request):
    """Attach a measured-value note to the criterion summary line."""

    def note(text):
        request.node.user_properties.append(("measured", text))

    return note


@pytest.fixture(scope="session")
def fold1_data():
    return repro.prepare("fold1")


@pytest.fixture(scope="session")
def fold2_data():
    return repro.prepare("fold2")
