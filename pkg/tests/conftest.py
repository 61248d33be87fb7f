import re
from collections import OrderedDict

import numpy as np
import pytest

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+?)(?:\[|$)")
_results: "OrderedDict[int, list]" = OrderedDict()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or (report.when != "call" and not report.failed):
        return
    entry = _results.setdefault(int(m.group(1)), [m.group(2), True, ""])
    if report.failed:
        entry[1] = False
        if not entry[2]:
            msg = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else ""
            entry[2] = msg.splitlines()[0] if msg else ""


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        name, ok, why = _results[num]
        line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name.replace('_', ' ')}"
        terminalreporter.write_line(line + (f"  ({why})" if why else ""))
