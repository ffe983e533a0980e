import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from afigan import _kernels  # noqa: E402


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    """Run a test once per importable kernel backend."""
    with _kernels.use_backend(request.param) as impl:
        yield impl


@pytest.fixture
def nprng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance outcome, print it, then assert it."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
