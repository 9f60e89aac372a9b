"""World assembly and the per-frame protocol loop for one simulation run.

A run owns its entire world: kernel, stations, connections, schedulers,
generators, and metrics. Per frame: the BS serves the downlink and builds
the uplink map at frame start; at uplink-subframe start every SS consumes
its grants, answers polls, and the contention region resolves. Uplink
arrivals relay through the BS onto the downlink connection of the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Optional

from .bwreq import BandwidthManager, ContentionState
from .kernel import EventKind, Simulator
from .metrics import (MetricSeries, MetricsCollector, RunMeta, RunSummary,
                      SCOPE_CELL, emit_csv, flow_scope)
from .phy import Direction, UlMap
from .qos import Connection, MacSdu, SchedulingClass, ServiceFlow
from .sched import make_scheduler
from .scenario import Scenario
from .stations import BaseStation, SubscriberStation, TransmissionRecord
from .traffic import make_source


class ConservationError(RuntimeError):
    """A packet or byte went missing: generated != delivered + queued + dropped."""


@dataclass
class RunResult:
    meta: RunMeta
    scenario: Scenario
    summary: RunSummary
    series: list[MetricSeries]
    dispatched: int
    audit: Optional[list[TransmissionRecord]] = None
    ul_maps: Optional[list[UlMap]] = None

    def write_csv(self, fh: IO[str]) -> None:
        emit_csv(fh, self.meta, self.series, self.summary)


class SimulationRun:
    def __init__(self, scenario: Scenario, record_audit: bool = False):
        scenario.validate()
        self.scenario = scenario
        self.cfg = scenario.frame
        self.sim = Simulator(scenario.seed)
        self.audit: Optional[list[TransmissionRecord]] = [] if record_audit else None
        self.ul_maps: Optional[list[UlMap]] = [] if record_audit else None

        self.bs = BaseStation(make_scheduler(scenario.scheduler_bs))
        self.bw = BandwidthManager(
            self.cfg, make_scheduler(scenario.scheduler_bs),
            request_bytes=scenario.contention.request_bytes,
            min_contention_slots=scenario.contention.min_slots)
        self.sss: dict[int, SubscriberStation] = {}
        for ss_id in range(1, scenario.station_count + 1):
            contention = ContentionState(
                ss_id, min_window=scenario.contention.min_window,
                max_window=scenario.contention.max_window,
                window=scenario.contention.min_window)
            self.sss[ss_id] = SubscriberStation(
                ss_id, make_scheduler(scenario.scheduler_ss), contention)

        self.ul_conns: dict[int, Connection] = {}
        self.flow_of_cid: dict[int, object] = {}
        self._sources = []
        for i, spec in enumerate(scenario.flows):
            ul_cid, dl_cid = 2 * i + 1, 2 * i + 2
            quantum = spec.weight * scenario.base_quantum_bytes
            reserved = spec.rate_bps if spec.cls in (SchedulingClass.UGS,
                                                     SchedulingClass.ERTPS) else 0
            ul_flow = ServiceFlow(
                sfid=i + 1, direction=Direction.UPLINK, cls=spec.cls,
                min_reserved_rate_bps=reserved, max_sustained_rate_bps=reserved,
                grant_interval_us=spec.grant_interval_us, weight=spec.weight)
            dl_flow = ServiceFlow(
                sfid=10_000 + i + 1, direction=Direction.DOWNLINK, cls=spec.cls,
                min_reserved_rate_bps=reserved, max_sustained_rate_bps=reserved,
                grant_interval_us=spec.grant_interval_us, weight=spec.weight)
            ul_conn = Connection(ul_cid, ul_flow, src=spec.src, dst=spec.dst,
                                 traffic_kind=spec.kind,
                                 queue_cap_packets=spec.queue_packets)
            dl_conn = Connection(dl_cid, dl_flow, src=0, dst=spec.dst,
                                 traffic_kind=spec.kind,
                                 queue_cap_packets=spec.queue_packets)
            self.ul_conns[ul_cid] = ul_conn
            self.flow_of_cid[ul_cid] = spec
            self.sss[spec.src].add_uplink(ul_conn, spec.weight, quantum)
            self.bs.add_downlink(dl_conn, ul_cid, spec.weight, quantum)
            self.bw.register_flow(
                ul_cid, spec.src, spec.cls, weight=spec.weight, quantum=quantum,
                grant_interval_us=spec.grant_interval_us, rate_bps=spec.rate_bps,
                packet_bytes=spec.packet_bytes, chunk_bytes=spec.mtu_bytes)
            self._sources.append(make_source(spec, ul_cid, self.sim.rng))

        self.metrics = MetricsCollector(
            scenario.bucket_us, scenario.duration_us,
            flow_cids=sorted(self.ul_conns), ss_ids=sorted(self.sss))
        self._sdu_counter = 0
        self._current_map: Optional[UlMap] = None

    # -------------------------------------------------------------- hooks

    def ingest(self, cid: int, size_bytes: int) -> None:
        """A generator emitted one SDU onto its uplink connection."""
        conn = self.ul_conns[cid]
        sdu = MacSdu(self._sdu_counter, cid, cid, size_bytes, self.sim.now)
        self._sdu_counter += 1
        self.metrics.record_offered(sdu, conn.src)
        ss = self.sss[conn.src]
        if ss.local_sched.pending(cid) >= conn.queue_cap_packets:
            conn.dropped_packets += 1
            conn.dropped_bytes += size_bytes
            self.metrics.record_drop(sdu, "src")
            return
        conn.enqueued_packets += 1
        conn.enqueued_bytes += size_bytes
        ss.local_sched.enqueue(cid, sdu.id, size_bytes,
                               arrival=self.sim.now, payload=sdu)

    def uplink_arrival(self, ss: SubscriberStation, sdu: MacSdu, n: int,
                       start_us: int, end_us: int) -> None:
        if self.audit is not None:
            self.audit.append(TransmissionRecord(
                n, Direction.UPLINK, sdu.cid, sdu.size_bytes, start_us, end_us))
        self.metrics.record_bs_ingress(sdu, end_us, ss.ss_id)
        self.bs.receive_uplink(self, sdu, n, end_us)

    def deliver_downlink(self, sdu: MacSdu, n: int, start_us: int, end_us: int) -> None:
        if self.audit is not None:
            self.audit.append(TransmissionRecord(
                n, Direction.DOWNLINK, sdu.cid, sdu.size_bytes, start_us, end_us))
        conn = self.bs.conns[sdu.cid]
        self.sss[conn.dst].recv_bytes += sdu.size_bytes
        self.metrics.record_delivery(sdu, end_us, conn.dst)

    # -------------------------------------------------------------- frames

    def _frame_start(self, n: int) -> None:
        ul_map = self.bs.frame_tick(self, n)
        self._current_map = ul_map
        if self.ul_maps is not None:
            self.ul_maps.append(ul_map)
        _, _, ul_start, frame_end = self.cfg.frame_boundaries(n)
        self.sim.schedule(ul_start, EventKind.UL_SUBFRAME_START, self._ul_start, n)
        if frame_end < self.scenario.duration_us:
            self.sim.schedule(frame_end, EventKind.FRAME_START, self._frame_start, n + 1)

    def _ul_start(self, n: int) -> None:
        ul_map = self._current_map
        ul_start = self.sim.now
        for ss_id in sorted(self.sss):
            self.sss[ss_id].on_map(self, ul_map, n, ul_start)
        slots = ul_map.contention_bytes // self.scenario.contention.request_bytes
        states = [self.sss[s].contention for s in sorted(self.sss)]
        delivered, collided = self.bw.run_contention(states, slots, self.sim.rng)
        for _slot, req in delivered:
            self.bw.on_request(req)
        self.metrics.record_collisions(len(collided))

    # ----------------------------------------------------------------- run

    def run(self) -> RunResult:
        for src in self._sources:
            src.start(self.sim, self.scenario.duration_us, self.ingest)
        self.sim.schedule(0, EventKind.FRAME_START, self._frame_start, 0)
        self.sim.run_until(self.scenario.duration_us)

        queued_packets, queued_bytes = self._queued_at_end()
        summary = self.metrics.build_summary(queued_packets, queued_bytes)
        self._audit_conservation(summary)
        meta = RunMeta(self.scenario.name, self.scenario.scheduler_bs,
                       self.scenario.scheduler_ss, self.scenario.seed)
        return RunResult(meta, self.scenario, summary, self.metrics.build_series(),
                         self.sim.dispatched, self.audit, self.ul_maps)

    def _queued_at_end(self) -> tuple[dict[str, int], dict[str, int]]:
        packets: dict[str, int] = {SCOPE_CELL: 0}
        nbytes: dict[str, int] = {SCOPE_CELL: 0}
        for ul_cid, conn in sorted(self.ul_conns.items()):
            scope = flow_scope(ul_cid)
            ss = self.sss[conn.src]
            dl_cid = self.bs.relay_map[ul_cid]
            p = ss.local_sched.pending(ul_cid) + self.bs.dl_sched.pending(dl_cid)
            b = (ss.local_sched.backlog_bytes(ul_cid)
                 + self.bs.dl_sched.backlog_bytes(dl_cid))
            packets[scope] = p
            nbytes[scope] = b
            packets[SCOPE_CELL] += p
            nbytes[SCOPE_CELL] += b
        return packets, nbytes

    def _audit_conservation(self, s: RunSummary) -> None:
        scopes = [SCOPE_CELL] + [flow_scope(cid) for cid in sorted(self.ul_conns)]
        for scope in scopes:
            gen = s.generated_packets.get(scope, 0), s.generated_bytes.get(scope, 0)
            acc = (s.delivered_packets.get(scope, 0) + s.dropped_packets.get(scope, 0)
                   + s.queued_packets_end.get(scope, 0),
                   s.delivered_bytes.get(scope, 0) + s.dropped_bytes.get(scope, 0)
                   + s.queued_bytes_end.get(scope, 0))
            if gen != acc:
                raise ConservationError(
                    f"{scope}: generated {gen} != delivered+dropped+queued {acc}")


def run_scenario(scenario: Scenario, record_audit: bool = False) -> RunResult:
    return SimulationRun(scenario, record_audit=record_audit).run()
