from pathlib import Path

import pytest

from ecolens import kernels
from ecolens.novelty import ImportEvent

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(params=kernels.available())
def backend(request):
    """Run the test once per available novelty kernel."""
    before = kernels.active()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(before)


def toy_events(lang="python"):
    """The three-post example: (os, sys), (random, sys), (os, random)."""
    return [
        ImportEvent(lang, 1, "2015-03-01T09:00:00.000", 101, ("os", "sys")),
        ImportEvent(lang, 2, "2015-03-01T09:30:00.000", 102, ("random", "sys")),
        ImportEvent(lang, 3, "2015-03-01T10:00:00.000", 101, ("os", "random")),
    ]


@pytest.fixture
def toy():
    return toy_events()


@pytest.fixture
def fixtures():
    return FIXTURES


# criterion number -> "PASS/FAIL ..." line, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def verdict(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
