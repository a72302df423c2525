"""TCP segments to ATM cell trains and back, plus cell-clocked links.

Each segment carries 56 bytes of layered overhead (20 TCP + 20 IP + 8 LLC +
8 AAL5 trailer) and pads into 48-byte cell payloads, so a 512-byte data
segment occupies exactly 12 cells of 53 wire bytes each and a bare ack
occupies 2. Links never drop cells; only switch ports do.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .engine import CELL_ARRIVAL, NS_PER_SEC

CELL_WIRE_BYTES = 53
CELL_PAYLOAD_BYTES = 48
FRAME_OVERHEAD_BYTES = 56  # 20 TCP + 20 IP + 8 LLC + 8 AAL5 trailer

# Cells are plain tuples because a run creates millions of them.
# Layout: (vc_id, packet_id, index_in_packet, is_last, segment)
CELL_VC, CELL_PID, CELL_INDEX, CELL_LAST, CELL_SEG = range(5)


@dataclass(frozen=True)
class Segment:
    """One TCP protocol data unit; pure acks have payload_len 0."""

    conn_id: int
    is_ack: bool
    seq: int
    payload_len: int
    ack_no: int = 0


def cells_for_segment(payload_len: int) -> int:
    """Number of cells a payload occupies after framing overhead and padding."""
    if payload_len < 0:
        raise ValueError(f"negative payload length {payload_len}")
    total = payload_len + FRAME_OVERHEAD_BYTES
    return (total + CELL_PAYLOAD_BYTES - 1) // CELL_PAYLOAD_BYTES


def segment_to_cells(segment: Segment, packet_id: int) -> list[tuple]:
    """Frame a segment into its ordered cell train (last cell marked)."""
    n = cells_for_segment(segment.payload_len)
    vc = segment.conn_id
    last = n - 1
    return [(vc, packet_id, i, i == last, segment) for i in range(n)]


class Reassembler:
    """Per-VC frame reassembly for cells arriving in network FIFO order.

    A train completes when its end-of-packet cell arrives with every earlier
    index present; cells are never duplicated in transit, so a simple count
    against the last cell's index suffices. Partial trains (either abandoned
    by a newer packet or truncated at the marker) count as discards.
    """

    __slots__ = ("pid", "count", "discards")

    def __init__(self) -> None:
        self.pid: int | None = None
        self.count = 0
        self.discards = 0

    def push(self, cell: tuple) -> Segment | None:
        """Feed one cell; returns the completed Segment or None."""
        pid = cell[CELL_PID]
        if pid != self.pid:
            if self.pid is not None and self.count:
                self.discards += 1
            self.pid = pid
            self.count = 0
        self.count += 1
        if cell[CELL_LAST]:
            complete = self.count == cell[CELL_INDEX] + 1
            if not complete:
                self.discards += 1
            self.pid = None
            self.count = 0
            return cell[CELL_SEG] if complete else None
        return None


def cell_time_fraction(rate_bps: int) -> Fraction:
    """Exact cell transmission time in nanoseconds for a link rate."""
    return Fraction(CELL_WIRE_BYTES * 8 * NS_PER_SEC, rate_bps)


class CellClock:
    """Service-completion times for back-to-back 53-byte cells.

    The cell time is irrational in integer nanoseconds for the standard
    155.52 Mbps rate (662500/243 ns), so completions accumulate as an exact
    rational within one busy period and round half-up only at event
    boundaries. A multi-million-cell busy period has zero cumulative drift.
    """

    __slots__ = ("num", "den", "half", "base", "count", "busy_until")

    def __init__(self, rate_bps: int) -> None:
        f = cell_time_fraction(rate_bps)
        self.num = f.numerator
        self.den = f.denominator
        self.half = f.denominator // 2
        self.base = 0
        self.count = 0
        self.busy_until = 0

    def start_period(self, now: int) -> int:
        """First completion of a fresh busy period starting at now."""
        self.base = now
        self.count = 1
        t = now + (self.num + self.half) // self.den
        self.busy_until = t
        return t

    def continue_period(self) -> int:
        """Completion of the next cell in an uninterrupted busy period."""
        self.count += 1
        t = self.base + (self.count * self.num + self.half) // self.den
        self.busy_until = t
        return t

    def completions(self, now: int, k: int) -> list[int]:
        """Completion times for k cells offered at now, joining any busy period."""
        if now >= self.busy_until:
            self.base = now
            self.count = 0
        base = self.base
        num = self.num
        den = self.den
        half = self.half
        c = self.count
        out = [base + ((c + i) * num + half) // den for i in range(1, k + 1)]
        self.count = c + k
        self.busy_until = out[-1]
        return out


class CellLink:
    """One direction of a point-to-point link: serializer plus fixed delay.

    Cells handed in FIFO order are clocked out at line rate and arrive at
    the far end one propagation delay after their transmission completes.
    """

    __slots__ = ("engine", "clock", "prop_ns", "sink")

    def __init__(self, engine, rate_bps: int, prop_ns: int, sink) -> None:
        self.engine = engine
        self.clock = CellClock(rate_bps)
        self.prop_ns = prop_ns
        self.sink = sink

    def send_cells(self, cells: list[tuple], now: int) -> None:
        schedule = self.engine.schedule
        prop = self.prop_ns
        sink = self.sink
        for cell, done in zip(cells, self.clock.completions(now, len(cells))):
            schedule(done + prop, CELL_ARRIVAL, sink, cell)
