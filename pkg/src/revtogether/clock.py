"""Injectable clocks so timed behavior is testable and script runs are reproducible."""

from __future__ import annotations

import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> float: ...


class SystemClock:
    """Wall-clock time, for interactive service use."""

    def now(self) -> float:
        return time.time()


class SimClock:
    """Manually advanced clock for tests and deterministic script runs."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("clock cannot move backwards")
        self._now += seconds
        return self._now

    def set(self, t: float) -> None:
        if t < self._now:
            raise ValueError("clock cannot move backwards")
        self._now = float(t)
