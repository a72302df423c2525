"""Wires one scenario into a live object graph and runs it to completion.

Topology (fixed): N source hosts -> switch A -> bottleneck link -> switch B
-> N destination hosts, with acks riding the reverse path through the same
switches. Each run owns all of its state and is single-threaded; the sweep
runner executes independent runs in separate processes.
"""

from __future__ import annotations

from .aal5 import CellLink, Segment, Reassembler, segment_to_cells
from .engine import APP_SEND, CELL_ARRIVAL, TIMER_TICK, EventQueue, NS_PER_SEC
from .metrics import RunResult
from .scenario import Scenario
from .switches import DropReason, InvariantError, OutputPort
from .tcp import TcpReceiver, TcpSender


class _DestEndpoint:
    """Destination host glue: reassembly, the TCP receiver, and its ack path."""

    __slots__ = ("sim", "conn", "reasm", "receiver", "ack_link")

    def __init__(self, sim, conn: int, mss: int) -> None:
        self.sim = sim
        self.conn = conn
        self.reasm = Reassembler()
        self.receiver = TcpReceiver(mss)
        self.ack_link: CellLink | None = None

    def on_cell(self, cell) -> None:
        sim = self.sim
        sim.cells_delivered += 1
        seg = self.reasm.push(cell)
        if seg is not None:
            ack_no = self.receiver.on_segment(seg.seq, seg.payload_len)
            sim.emit_segments((Segment(self.conn, True, 0, 0, ack_no),), self.ack_link)


class _SrcEndpoint:
    """Source host glue: ack reassembly, the TCP sender, and its data path."""

    __slots__ = ("sim", "conn", "reasm", "sender", "data_link")

    def __init__(self, sim, conn: int, sender: TcpSender) -> None:
        self.sim = sim
        self.conn = conn
        self.reasm = Reassembler()
        self.sender = sender
        self.data_link: CellLink | None = None

    def on_cell(self, cell) -> None:
        sim = self.sim
        sim.cells_delivered += 1
        seg = self.reasm.push(cell)
        if seg is None:
            return
        sender = self.sender
        now = sim.engine.now
        tick_ns = sim.tick_ns
        now_tick = now // tick_ns
        # A timer (re)started mid-interval begins counting at the next
        # boundary; the coarse clock cannot observe sub-tick arming.
        arm_tick = (now + tick_ns - 1) // tick_ns
        if sender.on_ack(seg.ack_no, now_tick, arm_tick):
            out = sender.try_send(now_tick, arm_tick)
            if out:
                sim.emit_segments(out, self.data_link)
        if sim.tracing:
            sim.record_cwnd(self.conn)


class Simulation:
    """One fully wired run. Build, call run(), read the RunResult."""

    def __init__(
        self,
        scenario: Scenario,
        audit: bool = False,
        collect_cwnd: bool = False,
        collect_rounds: bool = False,
    ) -> None:
        self.scenario = scenario
        self.engine = EventQueue()
        self.tick_ns = scenario.tick_ns
        self.audit = audit
        n = scenario.n_sources
        rate = scenario.link_rate_bps
        prop = scenario.link_delay_ns
        fwd_cap = scenario.buffer_cells
        rev_cap = scenario.reverse_buffer_cells
        fwd_cfg = scenario.policy_config(fwd_cap)
        rev_cfg = scenario.policy_config(rev_cap)

        self.cells_injected = 0
        self.cells_delivered = 0
        self._packet_seq = 0

        self.senders = [
            TcpSender(
                i,
                mss=scenario.mss,
                rcvwnd=scenario.rcvwnd,
                initial_ssthresh=scenario.initial_ssthresh,
                rto_initial=scenario.rto_initial_ticks,
                rto_max=scenario.rto_max_ticks,
            )
            for i in range(n)
        ]
        self.dests = [_DestEndpoint(self, i, scenario.mss) for i in range(n)]
        self.srcs = [_SrcEndpoint(self, i, self.senders[i]) for i in range(n)]

        eng = self.engine
        # Switch B fan-out: one port per destination host.
        self.b_dst_ports = [
            OutputPort(eng, f"B.dst{i}", n, fwd_cap, fwd_cfg, rate, prop,
                       self.dests[i].on_cell, audit)
            for i in range(n)
        ]
        # Switch A fan-out: one port per source host (ack delivery legs).
        self.a_src_ports = [
            OutputPort(eng, f"A.src{i}", n, rev_cap, rev_cfg, rate, prop,
                       self.srcs[i].on_cell, audit)
            for i in range(n)
        ]
        self.a_fwd_port = OutputPort(
            eng, "A.fwd", n, fwd_cap, fwd_cfg, rate, prop,
            [p.on_cell_arrival for p in self.b_dst_ports], audit,
        )
        self.b_rev_port = OutputPort(
            eng, "B.rev", n, rev_cap, rev_cfg, rate, prop,
            [p.on_cell_arrival for p in self.a_src_ports], audit,
        )
        self.ports = [self.a_fwd_port, self.b_rev_port] + self.b_dst_ports + self.a_src_ports

        for i in range(n):
            self.srcs[i].data_link = CellLink(eng, rate, prop, self.a_fwd_port.on_cell_arrival)
            self.dests[i].ack_link = CellLink(eng, rate, prop, self.b_rev_port.on_cell_arrival)

        self.cwnd_traces: list[list[tuple[int, int]]] | None = (
            [[] for _ in range(n)] if collect_cwnd else None
        )
        self.round_traces: list[list[int]] | None = (
            [[] for _ in range(n)] if collect_rounds else None
        )
        self._round_targets = [0] * n
        self.tracing = collect_cwnd or collect_rounds

    def emit_segments(self, segments, link: CellLink) -> None:
        cells = []
        pid = self._packet_seq
        for seg in segments:
            cells.extend(segment_to_cells(seg, pid))
            pid += 1
        self._packet_seq = pid
        self.cells_injected += len(cells)
        link.send_cells(cells, self.engine.now)

    def record_cwnd(self, conn: int) -> None:
        sender = self.senders[conn]
        if self.cwnd_traces is not None:
            trace = self.cwnd_traces[conn]
            if not trace or trace[-1][1] != sender.cwnd:
                trace.append((self.engine.now, sender.cwnd))
        if self.round_traces is not None:
            # A round ends when the ack clock has covered one full window.
            if sender.snd_una >= self._round_targets[conn]:
                self.round_traces[conn].append(sender.cwnd)
                self._round_targets[conn] = sender.snd_nxt

    def _on_tick(self, _arg) -> None:
        eng = self.engine
        now_tick = eng.now // self.tick_ns
        for i, sender in enumerate(self.senders):
            if sender.on_tick(now_tick):
                out = sender.try_send(now_tick)
                if out:
                    self.emit_segments(out, self.srcs[i].data_link)
                if self.tracing:
                    self.record_cwnd(i)
        eng.schedule(eng.now + self.tick_ns, TIMER_TICK, self._on_tick, None)

    def _start_source(self, conn: int) -> None:
        out = self.senders[conn].try_send(0)
        if out:
            self.emit_segments(out, self.srcs[conn].data_link)
        if self.tracing:
            self.record_cwnd(conn)

    def run(self) -> RunResult:
        eng = self.engine
        for i in range(self.scenario.n_sources):
            eng.schedule(0, APP_SEND, self._start_source, i)
        eng.schedule(self.tick_ns, TIMER_TICK, self._on_tick, None)
        eng.run_until(self.scenario.duration_ns)
        return self._collect()

    def _collect(self) -> RunResult:
        scn = self.scenario
        n = scn.n_sources
        delivered_bytes = [d.receiver.rcv_nxt for d in self.dests]
        max_queue_by_port = {p.name: p.max_x for p in self.ports}
        drops_by_port = {p.name: p.drops_total() for p in self.ports}
        drops_by_reason: dict[str, int] = {}
        for reason in DropReason:
            if reason is DropReason.NONE:
                continue
            total = sum(p.drops_by_reason[reason] for p in self.ports)
            if total:
                drops_by_reason[reason.name] = total
        drops_by_vc = [0] * n
        for p in self.ports:
            for vc in range(n):
                drops_by_vc[vc] += p.drops_by_vc[vc]
        discards = sum(d.reasm.discards for d in self.dests) + sum(
            s.reasm.discards for s in self.srcs
        )
        dropped = sum(drops_by_port.values())
        residual = sum(p.x for p in self.ports) + self.engine.pending(CELL_ARRIVAL)
        result = RunResult.from_counters(
            per_conn_delivered_bytes=delivered_bytes,
            duration_s=scn.duration_ns / NS_PER_SEC,
            link_rate_bps=scn.link_rate_bps,
            mss=scn.mss,
            max_queue_cells=self.a_fwd_port.max_x,
            max_queue_by_port=max_queue_by_port,
            drops_by_reason=drops_by_reason,
            drops_by_port=drops_by_port,
            drops_by_vc=drops_by_vc,
            reassembly_discards=discards,
            retransmitted_segments=sum(s.retransmits for s in self.senders),
            timeouts=sum(s.timeouts for s in self.senders),
            cells_injected=self.cells_injected,
            cells_delivered=self.cells_delivered,
            cells_dropped=dropped,
            cells_residual=residual,
        )
        if self.audit and not result.cells_conserved():
            raise InvariantError(
                f"cell conservation broke: injected {result.cells_injected} != "
                f"delivered {result.cells_delivered} + dropped {result.cells_dropped} "
                f"+ resident {result.cells_residual}"
            )
        for sender in self.senders:
            for seq, una in sender.goback_checks:
                if seq != una:
                    raise InvariantError(
                        f"conn {sender.conn_id}: first post-timeout emission at seq "
                        f"{seq}, expected snd_una {una}"
                    )
        return result


def run_scenario(scenario: Scenario, audit: bool = False) -> RunResult:
    """Execute one scenario deterministically and return its RunResult."""
    return Simulation(scenario, audit=audit).run()
