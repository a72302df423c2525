"""Output-buffered switch ports with the four UBR+ drop policies.

Every decision test runs in exact integer arithmetic: the cutoff Z is kept
as a rational and the load-ratio comparisons are cross-multiplied, so no
float ever enters a drop decision.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import NamedTuple

from .engine import CELL_ARRIVAL, CELL_DEPARTURE
from .aal5 import CellClock


class Policy(IntEnum):
    TAIL_DROP = 0
    EPD = 1
    SELECTIVE_DROP = 2
    FBA = 3


class Verdict(IntEnum):
    ACCEPT = 0
    DROP = 1


class DropReason(IntEnum):
    NONE = 0
    BUFFER_FULL = 1
    EPD_THRESHOLD = 2
    LOAD_RATIO = 3
    CONTINUED_PACKET_DISCARD = 4


class DropDecision(NamedTuple):
    verdict: Verdict
    reason: DropReason


# The five possible decisions, shared so the per-cell path allocates nothing.
ACCEPT = DropDecision(Verdict.ACCEPT, DropReason.NONE)
DROP_BUFFER_FULL = DropDecision(Verdict.DROP, DropReason.BUFFER_FULL)
DROP_EPD_THRESHOLD = DropDecision(Verdict.DROP, DropReason.EPD_THRESHOLD)
DROP_LOAD_RATIO = DropDecision(Verdict.DROP, DropReason.LOAD_RATIO)
DROP_CONTINUED = DropDecision(Verdict.DROP, DropReason.CONTINUED_PACKET_DISCARD)


class InvariantError(RuntimeError):
    """A switch accounting invariant broke (always fatal, never ignored)."""


def tail_drop_decide(x: int, k: int) -> DropDecision:
    """Cell-granular tail drop: reject only a physically full buffer."""
    return DROP_BUFFER_FULL if x >= k else ACCEPT


def epd_decide(x: int, k: int, r: int, first_cell: bool) -> DropDecision:
    """Drop whole new packets once occupancy strictly exceeds the threshold.

    Mid-packet cells of already-accepted packets ride through while any
    buffer space remains.
    """
    if x >= k:
        return DROP_BUFFER_FULL
    if first_cell and x > r:
        return DROP_EPD_THRESHOLD
    return ACCEPT


def load_ratio(y_i: int, n_a: int, x: int) -> Fraction:
    """Exact buffer share of one VC relative to the fair allocation x/n_a."""
    return Fraction(y_i * n_a, x)


def selective_drop_decide(
    x: int, k: int, r: int, y_i: int, n_a: int,
    z_num: int, z_den: int, first_cell: bool,
) -> DropDecision:
    """Above the threshold, drop new packets of VCs whose load ratio exceeds Z."""
    if x >= k:
        return DROP_BUFFER_FULL
    if first_cell and x > r and y_i * n_a * z_den > z_num * x:
        return DROP_LOAD_RATIO
    return ACCEPT


def fba_decide(
    x: int, k: int, r: int, y_i: int, n_a: int,
    z_num: int, z_den: int, first_cell: bool,
) -> DropDecision:
    """Selective drop against the dynamic cutoff Z*(K-R)/(X-R).

    The cutoff tightens toward Z as occupancy approaches capacity; the
    comparison is cross-multiplied (x > r guarantees x - r >= 1).
    """
    if x >= k:
        return DROP_BUFFER_FULL
    if first_cell and x > r and y_i * n_a * (x - r) * z_den > z_num * x * (k - r):
        return DROP_LOAD_RATIO
    return ACCEPT


def fba_threshold_identity_check(k: int, x: int, r: int) -> bool:
    """Self-test that the two cutoff spellings agree: 1+(K-X)/(X-R) == (K-R)/(X-R)."""
    if not r < x <= k:
        raise ValueError(f"need R < X <= K, got K={k} X={x} R={r}")
    return 1 + Fraction(k - x, x - r) == Fraction(k - r, x - r)


@dataclass(frozen=True)
class PolicyConfig:
    """Drop policy with its threshold R (cells) and rational cutoff Z."""

    policy: Policy
    r_cells: int | None = None
    z: Fraction | None = None

    def validate(self, capacity: int | None) -> None:
        p = self.policy
        if p is Policy.TAIL_DROP:
            return
        if capacity is None:
            raise ValueError(f"policy {p.name} requires a finite buffer")
        if self.r_cells is None or not 0 < self.r_cells < capacity:
            raise ValueError(
                f"policy {p.name} needs threshold 0 < R < K, got R={self.r_cells} K={capacity}"
            )
        if p in (Policy.SELECTIVE_DROP, Policy.FBA):
            if self.z is None or self.z <= 0:
                raise ValueError(f"policy {p.name} needs cutoff Z > 0, got {self.z}")


class OutputPort:
    """FIFO cell queue with per-VC accounting and a line-rate transmitter.

    Per-VC counters are updated only by enqueue/dequeue, never by scanning,
    so the per-cell cost stays O(1). The optional audit mode recomputes the
    accounting identities after every mutation.
    """

    def __init__(
        self,
        engine,
        name: str,
        n_vcs: int,
        capacity: int | None,
        cfg: PolicyConfig,
        rate_bps: int,
        prop_ns: int,
        sink,
        audit: bool = False,
    ) -> None:
        """sink is the far-end arrival callback, or a per-VC list of them
        when this port fans out to one next hop per virtual circuit."""
        cfg.validate(capacity)
        self.engine = engine
        self.name = name
        self.capacity = capacity
        self.policy = cfg.policy
        self.frame_aware = cfg.policy is not Policy.TAIL_DROP
        self.r = cfg.r_cells if cfg.r_cells is not None else 0
        if cfg.z is not None:
            self.z_num = cfg.z.numerator
            self.z_den = cfg.z.denominator
        else:
            self.z_num = self.z_den = 1
        self.queue: deque = deque()
        self.x = 0
        self.y = [0] * n_vcs
        self.na = 0
        self.discard_pid: list[int | None] = [None] * n_vcs
        self.clock = CellClock(rate_bps)
        self.prop_ns = prop_ns
        if isinstance(sink, list):
            self.sink_table: list | None = sink
            self.sink = None
        else:
            self.sink_table = None
            self.sink = sink
        self.busy = False
        self.audit = audit
        # statistics
        self.max_x = 0
        self.drops_by_reason = [0] * len(DropReason)
        self.drops_by_vc = [0] * n_vcs
        self.cells_out = 0
        if cfg.policy is Policy.TAIL_DROP:
            self._decide = self._decide_tail
        elif cfg.policy is Policy.EPD:
            self._decide = self._decide_epd
        elif cfg.policy is Policy.SELECTIVE_DROP:
            self._decide = self._decide_sd
        else:
            self._decide = self._decide_fba

    # Decision wrappers bind the port state to the pure policy functions.
    def _decide_tail(self, cell) -> DropDecision:
        cap = self.capacity
        if cap is None:
            return ACCEPT
        return tail_drop_decide(self.x, cap)

    def _decide_epd(self, cell) -> DropDecision:
        return epd_decide(self.x, self.capacity, self.r, cell[2] == 0)

    def _decide_sd(self, cell) -> DropDecision:
        return selective_drop_decide(
            self.x, self.capacity, self.r, self.y[cell[0]], self.na,
            self.z_num, self.z_den, cell[2] == 0,
        )

    def _decide_fba(self, cell) -> DropDecision:
        return fba_decide(
            self.x, self.capacity, self.r, self.y[cell[0]], self.na,
            self.z_num, self.z_den, cell[2] == 0,
        )

    def on_cell_arrival(self, cell) -> DropDecision:
        vc = cell[0]
        if self.frame_aware and self.discard_pid[vc] == cell[1]:
            decision = DROP_CONTINUED
        else:
            decision = self._decide(cell)
        if decision is ACCEPT:
            self.queue.append(cell)
            x = self.x + 1
            self.x = x
            if x > self.max_x:
                self.max_x = x
            yv = self.y[vc] + 1
            self.y[vc] = yv
            if yv == 1:
                self.na += 1
            if cell[3] and self.frame_aware:
                self.discard_pid[vc] = None
            if not self.busy:
                self.busy = True
                engine = self.engine
                engine.schedule(
                    self.clock.start_period(engine.now), CELL_DEPARTURE,
                    self._on_service_done, None,
                )
        else:
            self.drops_by_reason[decision[1]] += 1
            self.drops_by_vc[vc] += 1
            if self.frame_aware:
                # Poison the rest of this packet; the end-of-packet cell
                # (accepted or dropped) re-arms the VC for the next one.
                self.discard_pid[vc] = None if cell[3] else cell[1]
        if self.audit:
            self._audit_check()
        return decision

    def _on_service_done(self, _arg) -> None:
        cell = self.queue.popleft()
        x = self.x - 1
        self.x = x
        vc = cell[0]
        yv = self.y[vc] - 1
        self.y[vc] = yv
        if not yv:
            self.na -= 1
        self.cells_out += 1
        engine = self.engine
        table = self.sink_table
        target = self.sink if table is None else table[vc]
        engine.schedule(engine.now + self.prop_ns, CELL_ARRIVAL, target, cell)
        if x:
            engine.schedule(
                self.clock.continue_period(), CELL_DEPARTURE,
                self._on_service_done, None,
            )
        else:
            self.busy = False
        if self.audit:
            self._audit_check()

    def _audit_check(self) -> None:
        x = self.x
        if x != len(self.queue):
            raise InvariantError(f"{self.name}: X={x} but queue holds {len(self.queue)}")
        if sum(self.y) != x:
            raise InvariantError(f"{self.name}: sum(Y_i)={sum(self.y)} != X={x}")
        active = len(self.y) - self.y.count(0)
        if active != self.na:
            raise InvariantError(f"{self.name}: N_a={self.na} but {active} VCs active")
        if x < 0 or (self.capacity is not None and x > self.capacity):
            raise InvariantError(f"{self.name}: X={x} outside [0, {self.capacity}]")

    def drops_total(self) -> int:
        return sum(self.drops_by_reason)
