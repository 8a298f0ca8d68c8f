from __future__ import annotations

import time
from contextlib import contextmanager

import pytest

_LINES: dict[int, str] = {}


class _Criterion:
    def __init__(self, number, title, budget):
        self.number = number
        self.title = title
        self.budget = budget
        self.detail = ""


@contextmanager
def _track(number, title, budget):
    crit = _Criterion(number, title, budget)
    t0 = time.perf_counter()
    try:
        yield crit
    except BaseException as err:
        dt = time.perf_counter() - t0
        _LINES[number] = f"criterion {number:2d} FAIL  {title} ({dt:.1f}s): {type(err).__name__} {err}".splitlines()[0]
        print(_LINES[number])
        raise
    dt = time.perf_counter() - t0
    ok = dt < budget
    status = "PASS" if ok else "FAIL"
    _LINES[number] = f"criterion {number:2d} {status}  {title} ({dt:.1f}s < {budget:g}s) {crit.detail}".rstrip()
    print(_LINES[number])
    assert ok, f"runtime {dt:.1f}s exceeds {budget}s"


@pytest.fixture
def criterion():
    return _track


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
