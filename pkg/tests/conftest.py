import itertools

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def brute_force_derangements(n):
    """All derangements of 1..n by filtering every permutation, lexicographic."""
    return [
        tuple(p)
        for p in itertools.permutations(range(1, n + 1))
        if all(v != j for j, v in enumerate(p, start=1))
    ]


def two_pass_moments(values):
    values = [float(v) for v in values]
    mean = sum(values) / len(values)
    return mean, sum((v - mean) ** 2 for v in values) / len(values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def criterion():
    """Record a one-line pass/fail verdict for an acceptance criterion."""

    def record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
