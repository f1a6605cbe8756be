import time
from contextlib import contextmanager

import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Context manager that times one acceptance criterion and records a pass/fail line."""
    lines = request.config.stash[_LINES]

    @contextmanager
    def run(number, title, budget_s):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            took = time.perf_counter() - start
            lines.append(f"FAIL  criterion {number}: {title} ({took:.1f} s) -- {type(exc).__name__}")
            print(lines[-1])
            raise
        took = time.perf_counter() - start
        ok = took < budget_s
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({took:.1f} s, budget {budget_s:g} s)")
        print(lines[-1])
        assert ok, f"runtime {took:.1f} s exceeds {budget_s} s"

    return run


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
