"""Deterministic discrete-event engine on an integer-nanosecond clock.

All simulation time is whole nanoseconds so runs are bit-exact across
platforms. Events firing at the same instant dispatch in insertion order.
"""

from __future__ import annotations

import heapq

NS_PER_SEC = 1_000_000_000
NS_PER_MS = 1_000_000
NS_PER_US = 1_000

# Event kind tags. The engine ignores them; diagnostics and end-of-run
# audits use them to classify queued events (a CELL_ARRIVAL entry carries
# exactly one in-flight cell as its payload).
CELL_ARRIVAL = 1
CELL_DEPARTURE = 2
TIMER_TICK = 3
APP_SEND = 4

_F_TIME, _F_SEQ, _F_KIND, _F_FN, _F_ARG, _F_DEAD = range(6)


class SchedulingError(RuntimeError):
    """An event was scheduled behind the current simulation time."""


class EngineStateError(RuntimeError):
    """The engine was driven while it was already dispatching."""


class EventQueue:
    """Time-ordered event queue with a monotone clock.

    Heap entries are plain lists [fire_time, seq, kind, callback, payload,
    cancelled]; seq is a unique insertion counter, so heap comparisons stop
    at (fire_time, seq) and equal-time events keep FIFO order. Cancellation
    flips a flag and the entry is skipped on pop.
    """

    def __init__(self) -> None:
        self._heap: list[list] = []
        self._seq = 0
        self._running = False
        self.now = 0

    def schedule(self, fire_time: int, kind: int, callback, payload=None) -> list:
        """Queue callback(payload) at fire_time ns; returns a cancellation handle."""
        if fire_time < self.now:
            raise SchedulingError(
                f"event (kind={kind}) scheduled at t={fire_time} ns, behind the "
                f"clock at t={self.now} ns"
            )
        entry = [fire_time, self._seq, kind, callback, payload, False]
        self._seq += 1
        heapq.heappush(self._heap, entry)
        return entry

    def cancel(self, handle: list) -> None:
        # Lazy removal; cancelling twice is a no-op.
        handle[_F_DEAD] = True

    def run_until(self, end: int) -> int:
        """Dispatch every event with fire_time <= end and leave the clock at end.

        Returns the number of events dispatched (cancelled entries excluded).
        """
        if self._running:
            raise EngineStateError("run_until re-entered while dispatching")
        if end < self.now:
            raise ValueError(f"run_until({end}) is behind the clock at {self.now}")
        heap = self._heap
        pop = heapq.heappop
        dispatched = 0
        self._running = True
        try:
            while heap and heap[0][0] <= end:
                entry = pop(heap)
                if entry[5]:
                    continue
                self.now = entry[0]
                entry[3](entry[4])
                dispatched += 1
        finally:
            self._running = False
        self.now = end
        return dispatched

    def pending(self, kind: int | None = None) -> int:
        """Count live queued events, optionally restricted to one kind."""
        if kind is None:
            return sum(1 for e in self._heap if not e[_F_DEAD])
        return sum(1 for e in self._heap if not e[_F_DEAD] and e[_F_KIND] == kind)
