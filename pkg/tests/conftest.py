import os
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from aairl1 import _kernels  # noqa: E402

ACCEPTANCE_LINES = []

# reproducible property runs by default; HYPOTHESIS_PROFILE=explore draws fresh examples
settings.register_profile("repro", derandomize=True)
settings.register_profile("explore", derandomize=False)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    """Run the test once per kernel backend, restoring the default afterwards."""
    if request.param == "numba" and not _kernels.HAS_NUMBA:
        pytest.skip("numba unavailable")
    prev = _kernels.use_numba(request.param == "numba")
    yield request.param
    _kernels.use_numba(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance():
    """Record a one-line verdict for the summary printed after the run."""
    def record(number, ok, detail):
        line = "criterion %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail)
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
