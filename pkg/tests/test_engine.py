"""Event engine contract: ordering, ties, cancellation, clock discipline."""

from __future__ import annotations

import pytest

from ubrsim.engine import (
    APP_SEND,
    CELL_ARRIVAL,
    EngineStateError,
    EventQueue,
    SchedulingError,
)


def _collector(log, tag):
    return lambda payload: log.append((tag, payload))


def test_dispatch_orders_by_time():
    eng = EventQueue()
    log = []
    eng.schedule(100, APP_SEND, _collector(log, "late"))
    eng.schedule(50, APP_SEND, _collector(log, "early"))
    eng.run_until(200)
    assert [tag for tag, _ in log] == ["early", "late"]


def test_equal_times_dispatch_in_insertion_order():
    eng = EventQueue()
    log = []
    for i in range(20):
        eng.schedule(70, APP_SEND, _collector(log, i))
    eng.run_until(70)
    assert [tag for tag, _ in log] == list(range(20))


def test_cancelled_event_never_dispatches_and_double_cancel_is_noop():
    eng = EventQueue()
    log = []
    handle = eng.schedule(10, APP_SEND, _collector(log, "cancelled"))
    eng.schedule(20, APP_SEND, _collector(log, "kept"))
    eng.cancel(handle)
    eng.cancel(handle)
    dispatched = eng.run_until(100)
    assert log == [("kept", None)]
    assert dispatched == 1


def test_scheduling_in_the_past_fails_loudly():
    eng = EventQueue()
    eng.schedule(10, APP_SEND, lambda _: None)
    eng.run_until(50)
    with pytest.raises(SchedulingError):
        eng.schedule(49, APP_SEND, lambda _: None)


def test_empty_queue_advances_clock_with_zero_dispatches():
    eng = EventQueue()
    assert eng.run_until(1_000_000_000) == 0
    assert eng.now == 1_000_000_000


def test_run_until_boundary_is_inclusive():
    eng = EventQueue()
    fired = []
    for t in (1, 2, 3):
        eng.schedule(t, APP_SEND, fired.append, t)
    assert eng.run_until(2) == 2
    assert fired == [1, 2]
    assert eng.now == 2


def test_handler_can_schedule_within_same_run():
    eng = EventQueue()
    fired = []

    def chain(n):
        fired.append(n)
        if n < 5:
            eng.schedule(eng.now + 1, APP_SEND, chain, n + 1)

    eng.schedule(0, APP_SEND, chain, 0)
    eng.run_until(3)
    assert fired == [0, 1, 2, 3]
    eng.run_until(100)
    assert fired == [0, 1, 2, 3, 4, 5]


def test_reentrant_run_rejected():
    eng = EventQueue()

    def reenter(_):
        eng.run_until(10)

    eng.schedule(1, APP_SEND, reenter)
    with pytest.raises(EngineStateError):
        eng.run_until(5)


def test_dispatch_times_never_regress_and_runs_are_deterministic():
    def drive():
        eng = EventQueue()
        seen = []

        def handler(tag):
            seen.append((eng.now, tag))
            # deterministic self-scheduling fan-out
            if tag < 40:
                eng.schedule(eng.now + (tag % 7), APP_SEND, handler, tag + 3)
                eng.schedule(eng.now + (tag % 5), APP_SEND, handler, tag + 4)

        for i in range(8):
            eng.schedule(i % 3, APP_SEND, handler, i)
        eng.run_until(50)
        return seen

    first = drive()
    second = drive()
    assert first == second
    times = [t for t, _ in first]
    assert times == sorted(times)


def test_pending_counts_by_kind():
    eng = EventQueue()
    eng.schedule(5, CELL_ARRIVAL, lambda _: None)
    eng.schedule(6, CELL_ARRIVAL, lambda _: None)
    h = eng.schedule(7, CELL_ARRIVAL, lambda _: None)
    eng.schedule(8, APP_SEND, lambda _: None)
    eng.cancel(h)
    assert eng.pending(CELL_ARRIVAL) == 2
    assert eng.pending() == 3
