import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ymstab.grouplib import GroupKind  # noqa: E402

ALL_KINDS = [GroupKind("U", 1), GroupKind("U", 2), GroupKind("U", 3),
             GroupKind("SU", 2), GroupKind("SU", 3)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=ALL_KINDS, ids=str)
def kind(request):
    return request.param


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    """Print and keep one PASS/FAIL line for an acceptance criterion."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
