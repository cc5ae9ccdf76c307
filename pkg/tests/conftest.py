import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_difference_counts(elements, n, binary):
    counts = [0] * n
    for a in elements:
        for b in elements:
            if a != b:
                counts[(a ^ b) if binary else (a - b) % n] += 1
    return counts


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_acceptance(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
