"""Efficiency and fairness formulas plus their property suite."""

from __future__ import annotations

import math
import random

import pytest

from ubrsim.metrics import efficiency, fairness_index, max_possible_throughput

RATE = 155_520_000


def test_max_possible_throughput_standard_segment():
    best = max_possible_throughput(RATE, 512)
    assert best == pytest.approx(RATE * 512 / 636)
    assert best == pytest.approx(125.2e6, rel=1e-3)
    assert best / RATE == pytest.approx(512 / 636)


def test_max_possible_throughput_small_segment():
    # 40 payload bytes + 56 overhead = 96 -> 2 cells -> 40/106 of the line
    assert max_possible_throughput(RATE, 40) / RATE == pytest.approx(40 / 106)


def test_efficiency_examples():
    best = max_possible_throughput(RATE, 512)
    assert efficiency([best], RATE, 512) == pytest.approx(1.0)
    assert efficiency([best / 4, best / 4], RATE, 512) == pytest.approx(0.5)
    assert efficiency([0.0, 0.0], RATE, 512) == 0.0


def test_fairness_examples():
    assert fairness_index([7.0] * 5) == pytest.approx(1.0)
    assert fairness_index([1.0, 0.0, 0.0, 0.0, 0.0]) == pytest.approx(0.2)
    assert fairness_index([3.0, 1.0]) == pytest.approx(0.8)


def test_fairness_degenerate_all_zero():
    assert fairness_index([0.0, 0.0, 0.0]) == 1.0


def test_fairness_rejects_bad_input():
    with pytest.raises(ValueError):
        fairness_index([])
    with pytest.raises(ValueError):
        fairness_index([1.0, -2.0])


def test_fairness_property_suite():
    rng = random.Random(1977)
    for _ in range(1000):
        n = rng.randint(1, 20)
        values = [rng.random() * 10 ** rng.randint(0, 6) for _ in range(n)]
        if rng.random() < 0.1:
            values[rng.randrange(n)] = 0.0
        f = fairness_index(values)
        assert 1 / n - 1e-12 <= f <= 1 + 1e-12
        # scale invariance
        c = rng.random() * 100 + 0.01
        assert fairness_index([c * v for v in values]) == pytest.approx(f, rel=1e-9)
    # extremes
    for n in (2, 5, 17):
        assert fairness_index([4.2] * n) == pytest.approx(1.0)
        single = [0.0] * n
        single[n // 2] = 9.9
        assert fairness_index(single) == pytest.approx(1 / n)
