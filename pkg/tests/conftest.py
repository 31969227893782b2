import sys

import pytest

from hyperwave import _accel


@pytest.fixture(params=[True, False], ids=["numba", "numpy"])
def backend(request):
    prev = _accel.use_numba(request.param)
    yield request.param
    _accel.use_numba(prev)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is not None and acc.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(acc.RESULTS):
            terminalreporter.write_line(acc.RESULTS[key])
