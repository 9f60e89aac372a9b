"""Bandwidth request and grant machinery on the BS side.

UGS and ertPS flows receive unsolicited periodic grants; rtPS and nrtPS
are polled; nrtPS and BE may contend in the contention region, resolved
by slotted exponential backoff. Outstanding requests are aggregate: a new
request replaces the previous figure for that connection. The per-frame
uplink map allocates capacity in priority order: unsolicited grants,
unicast polls, data grants picked by the configured scheduler, and the
residue becomes the contention window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .kernel import RandomSource
from .phy import Direction, FrameConfig, GrantKind, MapIE, UlMap
from .qos import RequestMode, SchedulingClass, requires_request
from .sched import PacketScheduler


class OversubscribedUgsError(RuntimeError):
    """Fixed unsolicited grants alone exceed the uplink capacity."""


@dataclass
class BwRequest:
    cid: int
    bytes_requested: int
    issued_at: int
    mode: str  # poll-response | contention | piggyback


@dataclass
class ContentionState:
    ss_id: int
    min_window: int = 8
    max_window: int = 1024
    window: int = 8
    pending: Optional[BwRequest] = None
    backoff_remaining: Optional[int] = None  # None = not yet drawn


@dataclass
class _FlowEntry:
    cid: int
    ss_id: int
    cls: SchedulingClass
    grant_interval_us: int
    chunk_bytes: int


class GrantLedger:
    """Per-connection request/grant bookkeeping.

    outstanding mirrors the grant scheduler's queue backlogs; the poll and
    unsolicited schedules hold the next due time per connection;
    granted_unused accumulates allocation bytes the station left unfilled.
    """

    def __init__(self):
        self.outstanding: dict[int, int] = {}
        self.poll_next: dict[int, int] = {}
        self.unsolicited_next: dict[int, int] = {}
        self.unsolicited_size: dict[int, int] = {}
        self.granted_unused: dict[int, int] = {}

    def note_unused(self, cid: int, nbytes: int) -> None:
        if nbytes > 0:
            self.granted_unused[cid] = self.granted_unused.get(cid, 0) + nbytes


def _grant_size(interval_us: int, rate_bps: int) -> int:
    return -(-interval_us * rate_bps // 8_000_000)


class BandwidthManager:
    """Aggregates requests and builds the per-frame uplink map."""

    def __init__(self, cfg: FrameConfig, scheduler: PacketScheduler, *,
                 request_bytes: int = 8, min_contention_slots: int = 4):
        self.cfg = cfg
        self.scheduler = scheduler
        self.request_bytes = request_bytes
        self.min_contention_slots = min_contention_slots
        self.ledger = GrantLedger()
        self.flows: dict[int, _FlowEntry] = {}
        self._chunk_pid = 0

    def register_flow(self, cid: int, ss_id: int, cls: SchedulingClass, *,
                      weight: int = 1, quantum: int = 1518,
                      grant_interval_us: int = 12_500, rate_bps: int = 0,
                      packet_bytes: int = 1500, chunk_bytes: int = 1500) -> None:
        self.flows[cid] = _FlowEntry(cid, ss_id, cls, grant_interval_us, chunk_bytes)
        mode = requires_request(cls)
        if mode is RequestMode.UNSOLICITED:
            size = max(_grant_size(grant_interval_us, rate_bps), packet_bytes)
            self.ledger.unsolicited_next[cid] = 0
            self.ledger.unsolicited_size[cid] = size
        else:
            if mode is RequestMode.POLL:
                self.ledger.poll_next[cid] = 0
            self.ledger.outstanding[cid] = 0
            self.scheduler.add_queue(cid, weight=weight, quantum=quantum)

    # ------------------------------------------------------------- requests

    def on_request(self, req: BwRequest) -> None:
        """Aggregate semantics: the new figure replaces the old one.

        The grant queue is adjusted by the difference only, so unchanged
        head-of-line request chunks keep their scheduler position.
        """
        entry = self.flows[req.cid]
        if requires_request(entry.cls) is RequestMode.UNSOLICITED:
            raise ValueError(f"cid {req.cid} holds unsolicited grants, requests are invalid")
        self.ledger.outstanding[req.cid] = req.bytes_requested
        current = self.scheduler.backlog_bytes(req.cid)
        if req.bytes_requested < current:
            self.scheduler.trim_tail(req.cid, req.bytes_requested)
        else:
            left = req.bytes_requested - current
            while left > 0:
                size = min(left, entry.chunk_bytes)
                self.scheduler.enqueue(req.cid, self._chunk_pid, size)
                self._chunk_pid += 1
                left -= size

    def set_ertps_rate(self, cid: int, rate_bps: int) -> None:
        """ertPS grant-size adjustment; takes effect from the next frame."""
        entry = self.flows[cid]
        if entry.cls is not SchedulingClass.ERTPS:
            raise ValueError("only ertPS grants are adjustable")
        if rate_bps <= 0:
            size = self.request_bytes  # minimal request-carrying allocation
        else:
            size = _grant_size(entry.grant_interval_us, rate_bps)
        self.ledger.unsolicited_size[cid] = size

    # --------------------------------------------------------------- grants

    def issue_unsolicited(self, now: int) -> list[tuple[int, int]]:
        grants = []
        for cid in sorted(self.ledger.unsolicited_next):
            while self.ledger.unsolicited_next[cid] <= now:
                grants.append((cid, self.ledger.unsolicited_size[cid]))
                self.ledger.unsolicited_next[cid] += self.flows[cid].grant_interval_us
        return grants

    def poll_flows(self, now: int) -> list[int]:
        due = []
        for cid in sorted(self.ledger.poll_next):
            if self.ledger.poll_next[cid] <= now:
                while self.ledger.poll_next[cid] <= now:
                    self.ledger.poll_next[cid] += self.flows[cid].grant_interval_us
                due.append(cid)
        return due

    def build_ul_map(self, frame_index: int, now: int) -> UlMap:
        capacity = self.cfg.subframe_capacity_bytes(Direction.UPLINK)
        unsolicited = self.issue_unsolicited(now)
        unsol_total = sum(b for _, b in unsolicited)
        if unsol_total > capacity:
            raise OversubscribedUgsError(
                f"unsolicited grants need {unsol_total} B but uplink capacity is {capacity} B")

        polls = []
        polls_total = 0
        for cid in self.poll_flows(now):
            if unsol_total + polls_total + self.request_bytes <= capacity:
                polls.append(cid)
                polls_total += self.request_bytes

        floor = self.min_contention_slots * self.request_bytes
        data_budget = max(0, capacity - unsol_total - polls_total - floor)
        granted: dict[int, int] = {}
        for dec in self.scheduler.select(data_budget):
            granted[dec.cid] = granted.get(dec.cid, 0) + dec.bytes
        for cid in granted:
            self.ledger.outstanding[cid] = self.scheduler.backlog_bytes(cid)
        data_total = sum(granted.values())

        contention_bytes = capacity - unsol_total - polls_total - data_total
        slots = contention_bytes // self.request_bytes

        ul_map = UlMap(frame_index)
        cursor = 0
        by_ss: dict[int, list[MapIE]] = {}
        for cid, nbytes in sorted(unsolicited):
            by_ss.setdefault(self.flows[cid].ss_id, []).append(
                MapIE(cid, self.flows[cid].ss_id, 0, nbytes, GrantKind.DATA))
        for cid in sorted(granted):
            by_ss.setdefault(self.flows[cid].ss_id, []).append(
                MapIE(cid, self.flows[cid].ss_id, 0, granted[cid], GrantKind.DATA))
        for cid in polls:
            by_ss.setdefault(self.flows[cid].ss_id, []).append(
                MapIE(cid, self.flows[cid].ss_id, 0, self.request_bytes, GrantKind.POLL))
        for ss_id in sorted(by_ss):
            for ie in by_ss[ss_id]:
                ie.offset_bytes = cursor
                cursor += ie.grant_bytes
                ul_map.ies.append(ie)
        ul_map.contention_offset = cursor
        ul_map.contention_bytes = slots * self.request_bytes
        return ul_map

    # ----------------------------------------------------------- contention

    @staticmethod
    def run_contention(states: list[ContentionState], contention_slots: int,
                       rng: RandomSource) -> tuple[list[tuple[int, BwRequest]], list[int]]:
        """One frame of slotted contention.

        Returns (delivered, collided): delivered pairs each request with the
        slot it succeeded in; collided lists the cids whose windows doubled.
        """
        if contention_slots < 1:
            return [], []
        transmitters: dict[int, list[ContentionState]] = {}
        for st in sorted(states, key=lambda s: s.ss_id):
            if st.pending is None:
                continue
            if st.backoff_remaining is None:
                st.backoff_remaining = rng.draw_uniform(st.window)
            if st.backoff_remaining < contention_slots:
                transmitters.setdefault(st.backoff_remaining, []).append(st)
            else:
                st.backoff_remaining -= contention_slots
        delivered: list[tuple[int, BwRequest]] = []
        collided: list[int] = []
        for slot in sorted(transmitters):
            group = transmitters[slot]
            if len(group) == 1:
                st = group[0]
                delivered.append((slot, st.pending))
                st.pending = None
                st.window = st.min_window
                st.backoff_remaining = None
            else:
                for st in group:
                    collided.append(st.pending.cid)
                    st.window = min(st.window * 2, st.max_window)
                    st.backoff_remaining = rng.draw_uniform(st.window)
        return delivered, collided
