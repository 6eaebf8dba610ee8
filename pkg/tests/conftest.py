"""Shared fixtures plus the acceptance-summary reporter.

Tests named test_criterion_N are the acceptance gate; their outcomes are
echoed as one line each at the end of the run so the verdict is readable
without scrolling the full log.
"""

import re
from pathlib import Path

import pytest

from revtogether.clock import SimClock
from revtogether.engine import SessionEngine
from revtogether.gateway import Gateway, MockProvider

DATA_DIR = Path(__file__).parent / "data"

_CRITERION_RE = re.compile(r"test_criterion_(\d+)")
_criterion_results: dict[int, str] = {}


def pytest_runtest_logreport(report):
    match = _CRITERION_RE.search(report.nodeid)
    if not match:
        return
    n = int(match.group(1))
    if report.when == "call":
        _criterion_results[n] = "PASS" if report.passed else "FAIL"
    elif report.failed:
        # setup/teardown crash counts as a failed criterion
        _criterion_results[n] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criterion_results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criterion_results):
        terminalreporter.write_line(f"[criterion {n}] {_criterion_results[n]}")


@pytest.fixture(scope="session")
def mock_gateway() -> Gateway:
    return Gateway(MockProvider())


@pytest.fixture(scope="session")
def story_text() -> str:
    return (DATA_DIR / "story.txt").read_text(encoding="utf-8")


@pytest.fixture()
def sim_clock() -> SimClock:
    return SimClock(0.0)


@pytest.fixture()
def engine(mock_gateway, sim_clock, story_text) -> SessionEngine:
    return SessionEngine.create("s-test", story_text, mock_gateway, sim_clock)
