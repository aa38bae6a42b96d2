"""Slot-synchronous contention engine.

The channel advances one contention slot at a time.  Every active node whose
backoff counter has reached zero transmits in that slot: exactly one
transmitter is a success, two or more collide, none leaves the slot idle.  A
busy exchange is atomic at slot granularity and, like an idle slot, costs
every other active node exactly one backoff tick.  That uniform tick is what
lets a deterministic post-success counter of V repeat with period V + 1
regardless of how busy the channel is.

Because a counter ticks once per slot unconditionally, "counter c at slot s"
is the same thing as "transmits at slot s + c".  The engine therefore keeps a
heap of absolute due-slots instead of decrementing N counters per slot, and
run() skips event-free idle gaps in bulk.  No randomness is consumed in a
skipped gap, so bulk skipping is exactly equivalent to stepping slot by slot.

Time is tracked as (idle slot count, accumulated busy time) and composed on
demand, which keeps the clock bit-identical between the bulk and single-step
paths.
"""

import heapq
import random
from dataclasses import dataclass
from typing import ClassVar, Union

from .config import SimConfig
from .errors import ConsistencyError
from .metrics import MetricsAccumulator, MetricsReport
from .protocols import NodeState, after_transmission, on_packet_arrival
from .timing import TimingTable
from .traffic import ArrivalProcess, ArrivalStream, Packet


class Empty:
    kind: ClassVar[str] = "empty"

    def __repr__(self):
        return "Empty()"

    def __eq__(self, other):
        return isinstance(other, Empty)

    def __hash__(self):
        return hash("empty")


EMPTY = Empty()


@dataclass(frozen=True)
class Success:
    kind: ClassVar[str] = "success"
    transmitter: int
    batch_size: int


@dataclass(frozen=True)
class Collision:
    kind: ClassVar[str] = "collision"
    transmitters: tuple


SlotOutcome = Union[Empty, Success, Collision]


def slot_duration(outcome: SlotOutcome, timing: TimingTable,
                  batch_bits: int = 0) -> float:
    """Microseconds the channel is held by this slot.

    A collision wastes a full exchange span: the longest colliding frame plus
    the ACK timeout the senders sit through, which this model charges at the
    same length as the ACK itself.
    """
    if outcome.kind == "empty":
        return timing.slot_empty
    return timing.exchange_us(batch_bits)


class SimClock:
    """Slot index plus elapsed time, composed from idle and busy parts."""

    __slots__ = ("slot", "empty_count", "busy_us", "slot_empty_us")

    def __init__(self, slot_empty_us: float):
        self.slot = 0
        self.empty_count = 0
        self.busy_us = 0.0
        self.slot_empty_us = slot_empty_us

    @property
    def now_us(self) -> float:
        return self.slot_empty_us * self.empty_count + self.busy_us

    def advance_empty(self, n: int = 1) -> None:
        self.slot += n
        self.empty_count += n

    def advance_busy(self, duration_us: float) -> None:
        self.slot += 1
        self.busy_us += duration_us


class Simulation:
    """One configured run.  Drive it with advance_slot() or just run()."""

    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        t = cfg.timing
        master = random.Random(cfg.seed)
        self.proto_rng = random.Random(master.getrandbits(64))
        self.nodes = [NodeState(i) for i in range(cfg.n_nodes)]
        self.clock = SimClock(t.slot_empty)
        self.acc = MetricsAccumulator(cfg.n_nodes, t.slot_empty)
        if cfg.warmup_slots == 0:
            self.acc.warmup_end_us = 0.0
        self.tx_heap: list = []       # (due slot, node id), one entry per active node
        self.arrival_heap: list = []  # (next arrival us, node id), poisson only
        self.streams: list = []
        for node in self.nodes:
            rng = random.Random(master.getrandbits(64))
            if cfg.saturated:
                stream = ArrivalStream(node.node_id, ArrivalProcess.saturated(),
                                       t.payload_bits, rng)
            elif cfg.arrival_rate > 0:
                stream = ArrivalStream(node.node_id,
                                       ArrivalProcess.poisson(cfg.arrival_rate),
                                       t.payload_bits, rng)
                heapq.heappush(self.arrival_heap, (stream.next_us, node.node_id))
            else:
                stream = None
            self.streams.append(stream)
        if cfg.saturated:
            # backlogged from the first instant: full queue, join before slot 0
            for node in self.nodes:
                for pkt in self.streams[node.node_id].refill(
                        0, cfg.queue_capacity, 0.0):
                    counter = on_packet_arrival(node, pkt, cfg, self.proto_rng)
                    if counter is not None:
                        node.next_tx_slot = counter
                        heapq.heappush(self.tx_heap, (counter, node.node_id))

    # -- inspection helpers (handy in tests and debugging) -------------------

    def backoff_counter(self, node_id: int) -> int | None:
        """Slots left before this node transmits, None while inactive."""
        node = self.nodes[node_id]
        if not node.active:
            return None
        return node.next_tx_slot - self.clock.slot

    def inject_packets(self, node_id: int, count: int) -> None:
        """Test hook: place packets in a queue without touching contention."""
        node = self.nodes[node_id]
        t = self.cfg.timing
        now = self.clock.now_us
        for _ in range(count):
            node.queue.append(Packet(node_id, now, t.payload_bits))
            node.counters.arrivals += 1

    def set_backoff(self, node_id: int, counter: int) -> None:
        """Test hook: activate a node with an explicit counter."""
        assert counter >= 0
        node = self.nodes[node_id]
        assert node.queue, "a contending node needs something to send"
        assert not node.active, "node already scheduled"
        node.active = True
        node.next_tx_slot = self.clock.slot + counter
        heapq.heappush(self.tx_heap, (node.next_tx_slot, node_id))

    # -- the slot machine -----------------------------------------------------

    def _replenish(self, node: NodeState) -> None:
        stream = self.streams[node.node_id]
        for pkt in stream.refill(len(node.queue), self.cfg.queue_capacity,
                                 self.clock.now_us):
            node.queue.append(pkt)
            node.counters.arrivals += 1

    def advance_slot(self) -> SlotOutcome:
        """Resolve exactly one contention slot and advance the clock."""
        cfg = self.cfg
        clock = self.clock
        acc = self.acc
        s = clock.slot
        if acc.warmup_end_us is None and s >= cfg.warmup_slots:
            acc.warmup_end_us = clock.now_us
        counted = s >= cfg.warmup_slots

        tx_heap = self.tx_heap
        txs = []
        while tx_heap and tx_heap[0][0] == s:
            _, nid = heapq.heappop(tx_heap)
            node = self.nodes[nid]
            assert node.active and node.next_tx_slot == s
            txs.append(nid)
        assert not tx_heap or tx_heap[0][0] > s, "overdue transmission in heap"

        t = cfg.timing
        if not txs:
            outcome: SlotOutcome = EMPTY
            duration = t.slot_empty
        else:
            batch_sizes = {}
            max_bits = 0
            for nid in txs:
                q = self.nodes[nid].queue
                size = len(q)
                if size > cfg.max_aggregation:
                    size = cfg.max_aggregation
                batch_sizes[nid] = size
                bits = 0
                for j in range(size):
                    bits += q[j].payload_bits
                if bits > max_bits:
                    max_bits = bits
            if len(txs) == 1:
                outcome = Success(txs[0], batch_sizes[txs[0]])
            else:
                outcome = Collision(tuple(txs))
            duration = t.exchange_us(max_bits)

        slot_end = clock.now_us + duration

        # arrivals land mid-slot; a node they wake joins from the next slot on
        arr_heap = self.arrival_heap
        rng = self.proto_rng
        while arr_heap and arr_heap[0][0] < slot_end:
            _, nid = heapq.heappop(arr_heap)
            stream = self.streams[nid]
            node = self.nodes[nid]
            for pkt in stream.drain_poisson(slot_end):
                dropped_before = node.counters.dropped
                counter = on_packet_arrival(node, pkt, cfg, rng)
                if counter is not None:
                    node.next_tx_slot = s + 1 + counter
                    heapq.heappush(tx_heap, (node.next_tx_slot, nid))
                elif counted and node.counters.dropped > dropped_before:
                    acc.record_drop(nid)
            heapq.heappush(arr_heap, (stream.next_us, nid))

        if txs:
            success = len(txs) == 1
            replenish = self._replenish if cfg.saturated else None
            for nid in txs:
                node = self.nodes[nid]
                delivered, counter = after_transmission(
                    node, success, batch_sizes[nid], cfg, rng, replenish)
                if counted:
                    acc.record_attempt(nid, success)
                    if delivered:
                        acc.record_delivery(delivered, slot_end)
                    if success and counter is None:
                        acc.record_queue_empty(nid)
                if counter is not None:
                    node.next_tx_slot = s + 1 + counter
                    heapq.heappush(tx_heap, (node.next_tx_slot, nid))

        if counted:
            acc.record_slot(outcome, duration)
        if outcome is EMPTY:
            clock.advance_empty()
        else:
            clock.advance_busy(duration)
        return outcome

    def _bulk_empty(self, n: int) -> None:
        """Advance n idle slots known to contain no arrivals or transmissions."""
        cfg = self.cfg
        clock = self.clock
        acc = self.acc
        s0 = clock.slot
        warm = cfg.warmup_slots
        if acc.warmup_end_us is None and s0 + n > warm:
            assert s0 <= warm
            acc.warmup_end_us = (clock.slot_empty_us
                                 * (clock.empty_count + warm - s0)
                                 + clock.busy_us)
        counted = s0 + n - warm if s0 < warm else n
        if counted > 0:
            acc.record_empty_bulk(counted)
        clock.advance_empty(n)

    def run(self) -> MetricsReport:
        cfg = self.cfg
        clock = self.clock
        tx_heap = self.tx_heap
        arr_heap = self.arrival_heap
        se = clock.slot_empty_us
        end = cfg.sim_slots
        while clock.slot < end:
            s = clock.slot
            tx_due = tx_heap[0][0] if tx_heap else end
            if tx_due > s:
                gap_end = tx_due if tx_due < end else end
                if arr_heap:
                    a = arr_heap[0][0]
                    now = clock.now_us
                    k = int((a - now) / se)
                    while k > 0 and a < now + k * se:  # float floor guard
                        k -= 1
                    if s + k < gap_end:
                        gap_end = s + k
                if gap_end > s:
                    self._bulk_empty(gap_end - s)
                    continue
            self.advance_slot()
        return self._finalize()

    def _finalize(self) -> MetricsReport:
        cfg = self.cfg
        report = self.acc.finalize(self.nodes, cfg.sim_slots - cfg.warmup_slots)
        for node in self.nodes:
            c = node.counters
            if c.arrivals != c.delivered + c.dropped + len(node.queue):
                raise ConsistencyError(
                    f"packet ledger mismatch for node {node.node_id}: "
                    f"{c.arrivals} in, {c.delivered} out, {c.dropped} dropped, "
                    f"{len(node.queue)} still queued")
            if cfg.saturated and c.queue_empty_events:
                raise ConsistencyError(
                    f"saturated node {node.node_id} ran out of traffic")
        return report


def run_simulation(cfg: SimConfig) -> MetricsReport:
    """Run one configuration to completion; pure function of the config."""
    return Simulation(cfg).run()
