import functools

import numpy as np
import pytest

from sgarz.basis import build_space


@functools.lru_cache(maxsize=None)
def space(level):
    return build_space(level)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def positive_modes(rng, frame, low=0.2, high=0.8, margin=0.05):
    from sgarz.analysis import random_positive_modes

    return random_positive_modes(rng, frame, low, high, margin)


def e1(n, c=1.0):
    out = np.zeros(n)
    out[0] = c
    return out


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
