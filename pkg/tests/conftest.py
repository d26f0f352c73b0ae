import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rmpf.core import Dims  # noqa: E402
from rmpf.kap import setup  # noqa: E402

P64 = 18446744073709551557  # largest prime below 2^64
TOY_P = 104729


@pytest.fixture
def rng():
    return random.Random(20231018)


@pytest.fixture
def params64(rng):
    return setup(64, Dims(5, 3), rng)


_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance[report.nodeid.split("::")[-1]] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.failed:
        _acceptance[report.nodeid.split("::")[-1]] = "error"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
