import os

import numpy as np
import pytest

ACCEPTANCE = []


def record(number, title, passed, detail=""):
    ACCEPTANCE.append((number, title, bool(passed), detail))


@pytest.fixture
def acceptance():
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {number:>2}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


def pytest_configure(config):
    os.environ.setdefault("MIXEDORDER_THREADS", "1")
