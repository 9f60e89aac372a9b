"""Queue-service disciplines: WFQ, DWRR, WRR, and FIFO.

All four share one contract: packets are enqueued per connection, and
select(budget) returns the packets to transmit this frame, never exceeding
the budget and never splitting a packet. Scheduler state (virtual time,
deficits, rotation pointer) persists across frames.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

SCHEDULER_NAMES = ("wfq", "dwrr", "wrr", "fifo")


@dataclass(slots=True)
class QueuedPacket:
    pid: int
    size: int
    arrival: int = 0
    tag: Fraction = Fraction(0)
    payload: Any = None


@dataclass
class ServiceDecision:
    """A maximal consecutive run of packets served from one queue."""
    cid: int
    bytes: int
    packet_ids: list[int]
    payloads: list[Any] = field(default_factory=list)


class SchedulableQueue:
    __slots__ = ("cid", "weight", "quantum", "packets", "deficit",
                 "last_finish_tag", "visit_open", "visit_left", "backlog_bytes")

    def __init__(self, cid: int, weight: int = 1, quantum: int = 1):
        if weight < 1:
            raise ValueError("weight must be >= 1")
        if quantum < 1:
            raise ValueError("quantum must be >= 1")
        self.cid = cid
        self.weight = weight
        self.quantum = quantum
        self.packets: deque[QueuedPacket] = deque()
        self.deficit = 0
        self.last_finish_tag = Fraction(0)
        self.visit_open = False   # current rotation visit already credited
        self.visit_left = 0       # WRR: packets still allowed in the open visit
        self.backlog_bytes = 0


class PacketScheduler:
    """Shared queue bookkeeping; subclasses implement select()."""

    def __init__(self):
        self.queues: dict[int, SchedulableQueue] = {}
        self._order: list[int] = []  # ascending cid, the round-robin visit order

    def add_queue(self, cid: int, weight: int = 1, quantum: int = 1) -> SchedulableQueue:
        if cid in self.queues:
            raise ValueError(f"queue for cid {cid} already exists")
        q = SchedulableQueue(cid, weight, quantum)
        self.queues[cid] = q
        self._order.append(cid)
        self._order.sort()
        return q

    def enqueue(self, cid: int, pid: int, size: int, arrival: int = 0,
                payload: Any = None) -> None:
        if size < 1:
            raise ValueError("packet size must be >= 1")
        q = self.queues[cid]
        q.packets.append(QueuedPacket(pid, size, arrival, Fraction(0), payload))
        q.backlog_bytes += size

    def trim_tail(self, cid: int, target_bytes: int) -> None:
        """Shrink a queue from the tail until its backlog is target_bytes.

        Used for aggregate-request shrinkage; a trimmed-empty queue loses
        its deficit and visit state like a served-empty one.
        """
        q = self.queues[cid]
        while q.backlog_bytes > target_bytes:
            tail = q.packets[-1]
            excess = q.backlog_bytes - target_bytes
            if tail.size > excess:
                tail.size -= excess
                q.backlog_bytes -= excess
            else:
                q.packets.pop()
                q.backlog_bytes -= tail.size
        if not q.packets:
            q.deficit = 0
            q.visit_open = False
            q.visit_left = 0

    def pending(self, cid: int) -> int:
        return len(self.queues[cid].packets)

    def backlog_bytes(self, cid: int) -> int:
        return self.queues[cid].backlog_bytes

    def total_backlog_bytes(self) -> int:
        return sum(q.backlog_bytes for q in self.queues.values())

    def head(self, cid: int) -> Optional[QueuedPacket]:
        q = self.queues[cid]
        return q.packets[0] if q.packets else None

    def select(self, budget: int) -> list[ServiceDecision]:
        raise NotImplementedError

    @staticmethod
    def _emit(decisions: list[ServiceDecision], cid: int, pkt: QueuedPacket) -> None:
        if decisions and decisions[-1].cid == cid:
            d = decisions[-1]
            d.bytes += pkt.size
            d.packet_ids.append(pkt.pid)
            d.payloads.append(pkt.payload)
        else:
            decisions.append(ServiceDecision(cid, pkt.size, [pkt.pid], [pkt.payload]))


class WfqScheduler(PacketScheduler):
    """Weighted fair queueing via virtual-time finish tags.

    Tags are assigned at enqueue: tag = max(V, last_finish_tag) + size/weight.
    Service picks the minimum-tag head packet; the virtual clock advances to
    the tag of each served packet (self-clocked rule). So over any
    backlogged window each flow's byte share tends to weight_i / sum(weights).
    """

    def __init__(self):
        super().__init__()
        self.virtual_time = Fraction(0)

    def finish_tag(self, queue: SchedulableQueue, size: int) -> Fraction:
        tag = max(self.virtual_time, queue.last_finish_tag) + Fraction(size, queue.weight)
        queue.last_finish_tag = tag
        return tag

    def enqueue(self, cid: int, pid: int, size: int, arrival: int = 0,
                payload: Any = None) -> None:
        if size < 1:
            raise ValueError("packet size must be >= 1")
        q = self.queues[cid]
        tag = self.finish_tag(q, size)
        q.packets.append(QueuedPacket(pid, size, arrival, tag, payload))
        q.backlog_bytes += size

    def select(self, budget: int) -> list[ServiceDecision]:
        decisions: list[ServiceDecision] = []
        remaining = budget
        while True:
            best: Optional[SchedulableQueue] = None
            for cid in self._order:
                q = self.queues[cid]
                if not q.packets:
                    continue
                if best is None or q.packets[0].tag < best.packets[0].tag:
                    best = q
            if best is None:
                break
            pkt = best.packets[0]
            if pkt.size > remaining:
                break  # no fragmentation: an oversized head ends selection
            best.packets.popleft()
            best.backlog_bytes -= pkt.size
            remaining -= pkt.size
            if pkt.tag > self.virtual_time:
                self.virtual_time = pkt.tag
            self._emit(decisions, best.cid, pkt)
        return decisions


class DwrrScheduler(PacketScheduler):
    """Deficit round robin: per-visit quantum credit, byte-denominated.

    Each rotation visit credits the queue's quantum once, then serves head
    packets while the deficit and the frame budget both cover them. A head
    larger than the deficit leaves the queue skipped with its credit
    carried; a head larger than the remaining budget suspends the visit
    without re-crediting it next frame, which keeps the deficit below
    quantum + max packet size at every frame boundary. Serving a queue
    empty resets its deficit.
    """

    def __init__(self):
        super().__init__()
        self._pointer = 0

    def select(self, budget: int) -> list[ServiceDecision]:
        decisions: list[ServiceDecision] = []
        remaining = budget
        order = self._order
        n = len(order)
        if n == 0:
            return decisions
        self._pointer %= n
        while True:
            servable = any(
                q.packets and q.packets[0].size <= remaining
                for q in (self.queues[c] for c in order))
            if not servable:
                break
            q = self.queues[order[self._pointer]]
            if not q.packets or q.packets[0].size > remaining:
                self._pointer = (self._pointer + 1) % n
                continue
            resumed = q.visit_open
            if not q.visit_open:
                q.deficit += q.quantum
                q.visit_open = True
            budget_blocked = False
            while q.packets:
                pkt = q.packets[0]
                if pkt.size > q.deficit:
                    break
                if pkt.size > remaining:
                    budget_blocked = True
                    break
                q.packets.popleft()
                q.backlog_bytes -= pkt.size
                q.deficit -= pkt.size
                remaining -= pkt.size
                self._emit(decisions, q.cid, pkt)
            if not q.packets:
                q.deficit = 0
            if budget_blocked:
                # the visit stays open: the queue keeps its credit and is not
                # re-credited when the rotation returns to it
                self._pointer = (self._pointer + 1) % n
            else:
                q.visit_open = False
                if not resumed:
                    self._pointer = (self._pointer + 1) % n
                # a completed resumed visit does not consume the rotation
                # slot: the queue takes its fresh credited visit next, so
                # every pass nets exactly one quantum per backlogged queue
        return decisions


class WrrScheduler(PacketScheduler):
    """Weighted round robin: up to weight_i packets per visit, size-blind."""

    def __init__(self):
        super().__init__()
        self._pointer = 0

    def select(self, budget: int) -> list[ServiceDecision]:
        decisions: list[ServiceDecision] = []
        remaining = budget
        order = self._order
        n = len(order)
        if n == 0:
            return decisions
        self._pointer %= n
        while True:
            servable = any(
                q.packets and q.packets[0].size <= remaining
                for q in (self.queues[c] for c in order))
            if not servable:
                break
            q = self.queues[order[self._pointer]]
            if not q.packets or q.packets[0].size > remaining:
                self._pointer = (self._pointer + 1) % n
                continue
            resumed = q.visit_open
            if not q.visit_open:
                q.visit_left = q.weight
                q.visit_open = True
            budget_blocked = False
            while q.packets and q.visit_left > 0:
                pkt = q.packets[0]
                if pkt.size > remaining:
                    budget_blocked = True
                    break
                q.packets.popleft()
                q.backlog_bytes -= pkt.size
                q.visit_left -= 1
                remaining -= pkt.size
                self._emit(decisions, q.cid, pkt)
            if budget_blocked:
                self._pointer = (self._pointer + 1) % n
            else:
                q.visit_open = False
                q.visit_left = 0
                if not resumed:
                    self._pointer = (self._pointer + 1) % n
        return decisions


class FifoScheduler(PacketScheduler):
    """Global arrival order across all queues; ties broken by cid ascending."""

    def select(self, budget: int) -> list[ServiceDecision]:
        decisions: list[ServiceDecision] = []
        remaining = budget
        while True:
            best: Optional[SchedulableQueue] = None
            for cid in self._order:
                q = self.queues[cid]
                if not q.packets:
                    continue
                if best is None or q.packets[0].arrival < best.packets[0].arrival:
                    best = q
            if best is None:
                break
            pkt = best.packets[0]
            if pkt.size > remaining:
                break
            best.packets.popleft()
            best.backlog_bytes -= pkt.size
            remaining -= pkt.size
            self._emit(decisions, best.cid, pkt)
        return decisions


def make_scheduler(name: str) -> PacketScheduler:
    try:
        cls = {"wfq": WfqScheduler, "dwrr": DwrrScheduler,
               "wrr": WrrScheduler, "fifo": FifoScheduler}[name]
    except KeyError:
        raise ValueError(f"unknown scheduler {name!r}; choose from {SCHEDULER_NAMES}")
    return cls()
