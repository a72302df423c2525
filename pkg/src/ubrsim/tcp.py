"""TCP sender and receiver state machines without Fast Retransmit/Recovery.

Slow start and congestion avoidance drive the window; loss recovery is a
coarse-grained retransmission timer followed by go-back-N from the oldest
unacknowledged byte. Duplicate acks are counted but trigger nothing.
"""

from __future__ import annotations

from .aal5 import Segment


class ProtocolViolation(RuntimeError):
    """An endpoint observed an impossible ack; the run must abort."""


class RttEstimator:
    """Smoothed RTT and deviation in whole timer ticks.

    Classic fixed-point scaling: srtt is stored times 8 and rttvar times 4,
    so rto = (srtt8 >> 3) + rttvar4 equals srtt + 4*rttvar. Samples are in
    whole ticks; the retransmission timer never falls below one tick.
    """

    __slots__ = ("srtt8", "rttvar4", "rto", "rto_max", "initialized")

    def __init__(self, rto_initial: int = 3, rto_max: int = 640) -> None:
        self.srtt8 = 0
        self.rttvar4 = 0
        self.rto = rto_initial
        self.rto_max = rto_max
        self.initialized = False

    def sample(self, ticks: int) -> None:
        """Fold in one round-trip measurement (never from a retransmission)."""
        if ticks < 0:
            raise ValueError(f"negative RTT sample {ticks}")
        if not self.initialized:
            self.srtt8 = ticks << 3
            self.rttvar4 = ticks << 1
            self.initialized = True
        else:
            err = ticks - (self.srtt8 >> 3)
            self.srtt8 += err
            self.rttvar4 += abs(err) - (self.rttvar4 >> 2)
        rto = (self.srtt8 >> 3) + self.rttvar4
        self.rto = min(max(rto, 1), self.rto_max)

    def backoff(self) -> None:
        self.rto = min(2 * self.rto, self.rto_max)

    @property
    def srtt_ticks(self) -> int:
        return self.srtt8 >> 3


class TcpSender:
    """Window state for one infinite-source connection.

    Sequence numbers are unbounded byte offsets. The sender only ever emits
    full-MSS segments, and the usable window is min(cwnd, rcvwnd) even when
    cwnd has grown past the advertised receiver window.
    """

    def __init__(
        self,
        conn_id: int,
        mss: int = 512,
        rcvwnd: int = 65535,
        initial_ssthresh: int | None = None,
        rto_initial: int = 3,
        rto_max: int = 640,
    ) -> None:
        self.conn_id = conn_id
        self.mss = mss
        self.rcvwnd = rcvwnd
        self.cwnd = mss
        self.ssthresh = rcvwnd if initial_ssthresh is None else initial_ssthresh
        self.snd_una = 0
        self.snd_nxt = 0
        self.max_sent = 0
        self.ca_acc = 0  # congestion-avoidance growth accumulator, byte*byte units
        self.est = RttEstimator(rto_initial, rto_max)
        self.timer_expiry: int | None = None
        self.timed_seq: int | None = None
        self.timed_tick = 0
        # counters
        self.dup_acks = 0
        self.retransmits = 0
        self.timeouts = 0
        # first emission after each timeout, as (seq, snd_una) pairs
        self.goback_checks: list[tuple[int, int]] = []
        self._retx_pending = False

    @property
    def in_slow_start(self) -> bool:
        return self.cwnd < self.ssthresh

    def effective_window(self) -> int:
        return min(self.cwnd, self.rcvwnd)

    def try_send(self, now_tick: int, arm_tick: int | None = None) -> list[Segment]:
        """Emit every full segment the window permits, advancing snd_nxt.

        now_tick is the floor tick (RTT samples count whole elapsed ticks);
        arm_tick is the next tick boundary, where a freshly started timer
        begins counting (mid-interval arming is invisible to a coarse timer).
        """
        if arm_tick is None:
            arm_tick = now_tick
        mss = self.mss
        limit = self.snd_una + min(self.cwnd, self.rcvwnd)
        nxt = self.snd_nxt
        out = []
        while nxt + mss <= limit:
            if nxt < self.max_sent:
                self.retransmits += 1
            elif self.timed_seq is None:
                # Karn: time only segments sent exactly once.
                self.timed_seq = nxt
                self.timed_tick = now_tick
            out.append(Segment(self.conn_id, False, nxt, mss))
            nxt += mss
        if out:
            if self._retx_pending:
                self.goback_checks.append((out[0].seq, self.snd_una))
                self._retx_pending = False
            self.snd_nxt = nxt
            if nxt > self.max_sent:
                self.max_sent = nxt
            if self.timer_expiry is None:
                self.timer_expiry = arm_tick + self.est.rto
        return out

    def on_ack(self, ack_no: int, now_tick: int, arm_tick: int | None = None) -> bool:
        """Process one cumulative ack; returns True if it acked new data."""
        if arm_tick is None:
            arm_tick = now_tick
        if ack_no > self.max_sent:
            # Checked against the highest byte ever transmitted: after a
            # go-back-N rewind, old in-flight copies can legitimately draw
            # cumulative acks beyond the rewound snd_nxt.
            raise ProtocolViolation(
                f"conn {self.conn_id}: ack {ack_no} beyond max sent {self.max_sent}"
            )
        if ack_no <= self.snd_una:
            if ack_no == self.snd_una:
                self.dup_acks += 1
            return False
        if self.timed_seq is not None and ack_no >= self.timed_seq + self.mss:
            self.est.sample(now_tick - self.timed_tick)
            self.timed_seq = None
        self.snd_una = ack_no
        if self.snd_nxt < ack_no:
            # Cumulative ack covered bytes we had not resent yet (the
            # receiver had them cached); never send below snd_una again.
            self.snd_nxt = ack_no
        mss = self.mss
        if self.cwnd < self.ssthresh:
            self.cwnd += mss
        else:
            self.ca_acc += mss * mss
            if self.ca_acc >= self.cwnd * mss:
                self.ca_acc -= self.cwnd * mss
                self.cwnd += mss
        self.timer_expiry = None if self.snd_una == self.snd_nxt else arm_tick + self.est.rto
        return True

    def on_tick(self, now_tick: int) -> bool:
        """Coarse timer check at a tick boundary; returns True on timeout."""
        if (
            self.timer_expiry is not None
            and now_tick >= self.timer_expiry
            and self.snd_una < self.snd_nxt
        ):
            self._do_timeout(now_tick)
            return True
        return False

    def _do_timeout(self, now_tick: int) -> None:
        mss = self.mss
        self.ssthresh = max(2 * mss, min(self.cwnd // 2, self.rcvwnd))
        self.cwnd = mss
        self.snd_nxt = self.snd_una  # go-back-N
        self.ca_acc = 0
        self.est.backoff()
        self.timer_expiry = now_tick + self.est.rto
        self.timed_seq = None
        self.timeouts += 1
        self._retx_pending = True


class TcpReceiver:
    """Cumulative-ack receiver that caches out-of-order full-MSS segments."""

    __slots__ = ("mss", "rcv_nxt", "cache", "dups_discarded")

    def __init__(self, mss: int = 512) -> None:
        self.mss = mss
        self.rcv_nxt = 0
        self.cache: set[int] = set()
        self.dups_discarded = 0

    def on_segment(self, seq: int, length: int) -> int:
        """Absorb one intact segment; returns the ack number to emit now."""
        if seq == self.rcv_nxt:
            self.rcv_nxt = seq + length
            cache = self.cache
            while self.rcv_nxt in cache:
                cache.remove(self.rcv_nxt)
                self.rcv_nxt += self.mss
        elif seq > self.rcv_nxt:
            if seq in self.cache:
                self.dups_discarded += 1
            else:
                self.cache.add(seq)
        else:
            self.dups_discarded += 1
        return self.rcv_nxt
