"""Simulated network assembly: radio links, tunnels, taps, and responders.

Every packet traversal is a chain of scheduled events, so the event log
carries real timestamps for each milestone and the same scenario always
unfolds identically.  Fixed processing costs come from the calibration
file; per-traversal jitter comes from the probe's own substream so one
probe's draws never depend on unrelated activity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from random import Random

from . import access, rflink, userplane
from .calibration import Calibration
from .corenet import CoreNetwork
from .engine import EventLog, EventLoop, derive_rng
from .metrics import flow_session_id
from .scenario import NodeConfig, Scenario
from .spectrum import arfcn_to_frequency, get_band
from .userplane import (
    ForwardDecision,
    GnbRelay,
    InnerPacket,
    RouteTable,
    echo_reply_for,
    encode_gtpu,
    encode_ip,
    icmp_echo_request,
    upf_forward,
)


@dataclass
class RadioLink:
    ue: NodeConfig
    gnb: NodeConfig
    medium: rflink.LinkMedium
    relay: GnbRelay
    required_msps: float
    drop_fraction: float
    rsrp_dbm: float
    rng: Random  # LBT backoff substream for this link


class SimNetwork:
    """All simulated state of one scenario run."""

    def __init__(self, scenario: Scenario, loop: EventLoop, log: EventLog, calib: Calibration):
        self.scenario = scenario
        self.loop = loop
        self.log = log
        self.calib = calib
        self.core = CoreNetwork(scenario.core, scenario.subscribers)
        for _ in range(scenario.prior_allocations):
            self.core.pool.allocate()

        self.links: dict[str, RadioLink] = {}
        carrier_mhz = arfcn_to_frequency(scenario.cell.arfcn)
        for ue in scenario.ues():
            gnb = scenario.node(ue.gnb)
            required = rflink.required_sampling_rate(scenario.cell.bandwidth_mhz)
            drop = max(
                rflink.sample_drop_fraction(ue.host, required),
                rflink.sample_drop_fraction(gnb.host, required),
            )
            viable = rflink.link_viable(drop)
            rsrp = rflink.compute_rsrp(
                scenario.cell.tx_power_dbm,
                scenario.cell.attenuation_factor,
                ue.medium,
                carrier_mhz=carrier_mhz,
            )
            self.links[ue.name] = RadioLink(
                ue=ue,
                gnb=gnb,
                medium=ue.medium,
                relay=GnbRelay(viable=viable, drop_fraction=drop),
                required_msps=required,
                drop_fraction=drop,
                rsrp_dbm=rsrp,
                rng=derive_rng(scenario.seed, f"lbt:{ue.name}"),
            )

        self.taps: dict[str, list[tuple[int, bytes]]] = {t: [] for t in scenario.taps}
        self.ue_ip: dict[str, str] = {}
        self.attach_states: dict[str, access.UeState] = {}
        self.counters = {
            "upf_dropped_no_session": 0,
            "radio_dropped_bulk": 0,
            "lbt_deferred": 0,
        }
        self._icmp_handlers: dict[tuple[str, int], object] = {}
        self._nat: dict[tuple[str, int | None], str] = {}
        self._ip_ident = 0
        self.attach_complete_us = 0

    # -- setup ---------------------------------------------------------------

    def attach_all(self) -> dict[str, access.UeState]:
        """Attach every UE in scenario order, logging timed milestones."""
        band = get_band(self.scenario.cell.band_id)
        cursor = 1000
        for ue in self.scenario.ues():
            link = self.links[ue.name]
            self.log.append(cursor, ue.name, "link_budget",
                            rsrp_dbm=round(link.rsrp_dbm, 2),
                            required_msps=link.required_msps,
                            drop_fraction=link.drop_fraction,
                            viable=link.relay.viable)
            gscn = self.scenario.cell.ssb_gscn if link.gnb.on_air else None
            state = access.attach(band, gscn, self.core, ue.imsi, ue_id=ue.name)
            self.attach_states[ue.name] = state
            t = cursor
            self.log.append(t, ue.name, "attach_phase", phase="SCANNING")
            t += state.scan_steps * self.calib.scan_step_us
            if state.phase >= access.UePhase.SYNCED:
                self.log.append(t, ue.name, "attach_phase", phase="SYNCED",
                                gscn=state.found_gscn, scan_steps=state.scan_steps)
            if state.phase >= access.UePhase.REGISTERED:
                t += self.calib.registration_us
                self.log.append(t, ue.name, "attach_phase", phase="REGISTERED", imsi=ue.imsi)
            if state.phase >= access.UePhase.SESSION_ACTIVE:
                t += self.calib.session_setup_us
                self.ue_ip[ue.name] = state.session.ip
                self.log.append(t, ue.name, "attach_phase", phase="SESSION_ACTIVE",
                                ip=state.session.ip,
                                interface=state.session.interface,
                                teid_uplink=state.session.teid_uplink,
                                teid_downlink=state.session.teid_downlink)
            if state.failure:
                self.log.append(t, ue.name, "attach_failed", reason=state.failure,
                                phase=state.phase.name)
            cursor = t + 10_000
        self.attach_complete_us = cursor + 100_000
        return self.attach_states

    # -- address resolution ----------------------------------------------------

    def resolve_dst(self, dst: str, src_ue: str | None = None) -> str | None:
        if dst == "core-gateway":
            return str(self.core.pool.gateway)
        if dst == "external":
            return self.scenario.external.address
        if dst in self.ue_ip:
            return self.ue_ip[dst]
        if any(n.name == dst for n in self.scenario.nodes):
            return None  # known node without an address
        return dst  # literal IPv4

    # -- probe entry points ------------------------------------------------------

    def schedule_icmp_echo(self, ue_name, dst_ip, ident, seq, at_us, rng, reply_cb) -> None:
        self._icmp_handlers[(ue_name, ident)] = reply_cb

        def emit():
            src_ip = self.ue_ip.get(ue_name)
            if src_ip is None:
                self.log.append(self.loop.now_us, ue_name, "ping_no_route", seq=seq)
                return
            inner = icmp_echo_request(src_ip, dst_ip, ident, seq)
            self.log.append(self.loop.now_us, ue_name, "ping_tx", dst=dst_ip, seq=seq, ident=ident)
            self._uplink(ue_name, inner, rng)

        self.loop.schedule_at(at_us, emit)

    def schedule_bulk_tick(self, ue_name, direction, at_us, nbytes, tag, delivered_cb) -> None:
        if direction == "UL":
            self.loop.schedule_at(at_us, lambda: self._bulk_uplink(ue_name, nbytes, tag, delivered_cb))
        else:
            self.loop.schedule_at(at_us, lambda: self._bulk_downlink(ue_name, nbytes, tag, delivered_cb))

    # -- uplink chain -------------------------------------------------------------

    def _radio_departure(self, link: RadioLink, direction: str, ready_us: int) -> int | None:
        """LBT grant plus TDD alignment; None when the gate defers."""
        gate = access.lbt_gate(self.scenario.occupancy, self.scenario.cell.lbt, ready_us, link.rng)
        if not gate.granted:
            self.counters["lbt_deferred"] += 1
            self.log.append(self.loop.now_us, link.gnb.name, "lbt_deferred", direction=direction)
            return None
        return access.next_transmit_time(self.scenario.cell.tdd, direction, gate.grant_us)

    def _air_extra_us(self, link: RadioLink) -> int:
        return self.calib.over_air_extra_us if isinstance(link.medium, rflink.OverAir) else 0

    def _with_ident(self, pkt: InnerPacket) -> InnerPacket:
        """Assign the originating stack's IP identification, once."""
        if pkt.ident:
            return pkt
        self._ip_ident = (self._ip_ident + 1) & 0xFFFF or 1
        return replace(pkt, ident=self._ip_ident)

    def _uplink(self, ue_name: str, inner: InnerPacket, rng: Random) -> None:
        """UE stack -> radio -> gNB -> N3 tunnel -> UPF ingress."""
        link = self.links[ue_name]
        now = self.loop.now_us
        inner = self._with_ident(inner)
        inner_bytes = encode_ip(inner)
        self._tap(f"ue:{ue_name}", now, inner_bytes)
        ready = now + self.calib.ue_proc_us + link.ue.host.added_latency_us
        tx_at = self._radio_departure(link, "UL", ready)
        if tx_at is None:
            return
        if link.relay.relay("UL", inner_bytes) is None:
            self.counters["radio_dropped_bulk"] += 1
            self.log.append(now, link.gnb.name, "radio_drop", direction="UL", size=len(inner_bytes))
            return
        arrive_gnb = (tx_at + self.calib.radio_proc_us + self._air_extra_us(link)
                      + rng.randint(0, self.calib.jitter_max_us))

        def gnb_step():
            t = self.loop.now_us
            session = self.core.sessions.get(ue_name)
            teid = session.teid_uplink if session else 0
            self.log.append(t, link.gnb.name, "gtpu_ul", teid=teid, size=len(inner_bytes))
            if f"n3:{link.gnb.name}" in self.taps:
                outer = self._outer_bytes(link, teid, inner_bytes, uplink=True)
                self._tap(f"n3:{link.gnb.name}", t, outer)
            delay = (self.calib.gnb_proc_us + link.gnb.host.added_latency_us
                     + self.calib.core_proc_us)
            self.loop.schedule_after(delay, lambda: self._upf_ingress(inner, rng))

        self.loop.schedule_at(arrive_gnb, gnb_step)

    def _outer_bytes(self, link: RadioLink, teid: int, inner_bytes: bytes, uplink: bool) -> bytes:
        gnb_addr = link.gnb.n3_address or self.core.config.amf_address
        upf_addr = self.core.config.upf_address
        src, dst = (gnb_addr, upf_addr) if uplink else (upf_addr, gnb_addr)
        tunnel = encode_gtpu(teid, inner_bytes)
        outer = self._with_ident(
            InnerPacket(src=src, dst=dst, protocol="UDP", payload=tunnel,
                        sport=userplane.GTPU_PORT, dport=userplane.GTPU_PORT)
        )
        return encode_ip(outer)

    # -- UPF --------------------------------------------------------------------

    def _routes(self) -> RouteTable:
        return RouteTable(
            pool_cidr=self.core.pool.cidr,
            sessions={s.ip: s for s in self.core.active_sessions()},
            upf_address=self.core.config.upf_address,
            external_gateway=self.scenario.external.address,
        )

    def _upf_ingress(self, inner: InnerPacket, rng: Random) -> None:
        """Decapsulated packet at the UPF, from the tunnel side."""
        now = self.loop.now_us
        gateway = str(self.core.pool.gateway)
        if inner.dst in (gateway, self.core.config.upf_address):
            if inner.icmp_type == userplane.ICMP_ECHO_REQUEST:
                self.log.append(now, "core", "core_echo", src=inner.src, seq=inner.icmp_seq)
                self._upf_ingress(echo_reply_for(inner), rng)
            return
        decision = upf_forward(inner, self._routes())
        self._apply_forward(decision, inner, rng)

    def _apply_forward(self, decision: ForwardDecision, inner: InnerPacket, rng: Random) -> None:
        now = self.loop.now_us
        if decision.action == userplane.FORWARD_DROP:
            self.counters["upf_dropped_no_session"] += 1
            self.log.append(now, "upf", "upf_drop", dst=inner.dst)
            return
        if decision.action == userplane.FORWARD_TUNNEL:
            session = decision.session
            self.log.append(now, "upf", "upf_tunnel", dst=inner.dst,
                            teid=session.teid_downlink)
            self._downlink(session.ue_id, decision.packet, rng)
            return
        # Egress toward the external network with the UPF as visible source.
        rewritten = decision.packet
        if inner.protocol == "ICMP":
            self._nat[("ICMP", inner.icmp_id)] = inner.src
        self.log.append(now, "upf", "upf_egress", dst=rewritten.dst,
                        visible_src=rewritten.src)
        self._tap("n6", now, encode_ip(rewritten))
        self.loop.schedule_after(self.scenario.external.one_way_delay_us,
                                 lambda: self._external_ingress(rewritten, rng))

    def _external_ingress(self, pkt: InnerPacket, rng: Random) -> None:
        """The simulated Internet responder."""
        now = self.loop.now_us
        if pkt.icmp_type != userplane.ICMP_ECHO_REQUEST:
            return
        reply = echo_reply_for(pkt, ttl=self.scenario.external.ttl)
        self.log.append(now, "external", "external_reply", to=reply.dst, seq=reply.icmp_seq)
        self.loop.schedule_after(self.scenario.external.one_way_delay_us,
                                 lambda: self._n6_ingress(reply, rng))

    def _n6_ingress(self, pkt: InnerPacket, rng: Random) -> None:
        """Reply arriving at the UPF from the external network."""
        now = self.loop.now_us
        pkt = self._with_ident(pkt)
        self._tap("n6", now, encode_ip(pkt))
        original = self._nat.get((pkt.protocol, pkt.icmp_id))
        if original is None:
            self.counters["upf_dropped_no_session"] += 1
            self.log.append(now, "upf", "upf_drop", dst=pkt.dst)
            return
        restored = replace(pkt, dst=original)
        self._apply_forward(upf_forward(restored, self._routes()), restored, rng)

    # -- downlink chain ------------------------------------------------------------

    def _downlink(self, ue_name: str, inner: InnerPacket, rng: Random) -> None:
        """UPF -> N3 tunnel -> gNB -> radio -> UE stack -> delivery."""
        link = self.links[ue_name]
        inner = self._with_ident(inner)
        inner_bytes = encode_ip(inner)
        arrive_gnb = (self.loop.now_us + self.calib.core_proc_us
                      + self.calib.gnb_proc_us + link.gnb.host.added_latency_us)

        def gnb_step():
            t = self.loop.now_us
            session = self.core.sessions.get(ue_name)
            teid = session.teid_downlink if session else 0
            self.log.append(t, link.gnb.name, "gtpu_dl", teid=teid, size=len(inner_bytes))
            if f"n3:{link.gnb.name}" in self.taps:
                outer = self._outer_bytes(link, teid, inner_bytes, uplink=False)
                self._tap(f"n3:{link.gnb.name}", t, outer)
            tx_at = self._radio_departure(link, "DL", t)
            if tx_at is None:
                return
            if link.relay.relay("DL", inner_bytes) is None:
                self.counters["radio_dropped_bulk"] += 1
                self.log.append(t, link.gnb.name, "radio_drop", direction="DL",
                                size=len(inner_bytes))
                return
            arrive_ue = (tx_at + self.calib.radio_proc_us + self._air_extra_us(link)
                         + rng.randint(0, self.calib.jitter_max_us)
                         + self.calib.ue_proc_us + link.ue.host.added_latency_us)
            self.loop.schedule_at(arrive_ue, lambda: self._deliver_to_ue(ue_name, inner, rng))

        self.loop.schedule_at(arrive_gnb, gnb_step)

    def _deliver_to_ue(self, ue_name: str, inner: InnerPacket, rng: Random) -> None:
        now = self.loop.now_us
        self._tap(f"ue:{ue_name}", now, encode_ip(inner))
        if inner.icmp_type == userplane.ICMP_ECHO_REPLY:
            handler = self._icmp_handlers.get((ue_name, inner.icmp_id))
            if handler is not None:
                self.log.append(now, ue_name, "rtt_sample", ident=inner.icmp_id,
                                seq=inner.icmp_seq, session=flow_session_id("ICMP", inner.icmp_id))
                handler(inner.icmp_seq, now)
            return
        if inner.icmp_type == userplane.ICMP_ECHO_REQUEST:
            # Standard stack behaviour: answer pings addressed to us.
            self.log.append(now, ue_name, "ue_echo", src=inner.src, seq=inner.icmp_seq)
            self._uplink(ue_name, echo_reply_for(inner), rng)

    # -- bulk (aggregate) traffic -----------------------------------------------

    def _bulk_delivered(self, link: RadioLink, nbytes: int) -> int:
        if link.drop_fraction == 0:
            return nbytes
        return round(nbytes * (1 - link.drop_fraction))

    def _bulk_uplink(self, ue_name, nbytes, tag, delivered_cb) -> None:
        link = self.links[ue_name]
        now = self.loop.now_us
        if self.ue_ip.get(ue_name) is None:
            return
        self.log.append(now, ue_name, "bulk_tx", direction="UL", size=nbytes,
                        window=tag[0], sub=tag[1])
        ready = now + self.calib.ue_proc_us + link.ue.host.added_latency_us
        tx_at = self._radio_departure(link, "UL", ready)
        if tx_at is None:
            return
        if not link.relay.passes(nbytes):
            link.relay.dropped_bulk += 1
            self.counters["radio_dropped_bulk"] += 1
            self.log.append(now, link.gnb.name, "radio_drop", direction="UL", size=nbytes)
            return
        delivered = self._bulk_delivered(link, nbytes)
        arrive = (tx_at + self.calib.radio_proc_us + self._air_extra_us(link)
                  + self.calib.gnb_proc_us + link.gnb.host.added_latency_us
                  + self.calib.core_proc_us)

        def core_rx():
            self.log.append(self.loop.now_us, "core", "bulk_rx", direction="UL",
                            size=delivered, window=tag[0], sub=tag[1])
            delivered_cb(tag, delivered)

        self.loop.schedule_at(arrive, core_rx)

    def _bulk_downlink(self, ue_name, nbytes, tag, delivered_cb) -> None:
        link = self.links[ue_name]
        now = self.loop.now_us
        if self.ue_ip.get(ue_name) is None:
            return
        self.log.append(now, "core", "bulk_tx", direction="DL", size=nbytes,
                        window=tag[0], sub=tag[1])
        ready = now + self.calib.core_proc_us + self.calib.gnb_proc_us + link.gnb.host.added_latency_us
        tx_at = self._radio_departure(link, "DL", ready)
        if tx_at is None:
            return
        if not link.relay.passes(nbytes):
            link.relay.dropped_bulk += 1
            self.counters["radio_dropped_bulk"] += 1
            self.log.append(now, link.gnb.name, "radio_drop", direction="DL", size=nbytes)
            return
        delivered = self._bulk_delivered(link, nbytes)
        arrive = (tx_at + self.calib.radio_proc_us + self._air_extra_us(link)
                  + self.calib.ue_proc_us + link.ue.host.added_latency_us)

        def ue_rx():
            self.log.append(self.loop.now_us, ue_name, "bulk_rx", direction="DL",
                            size=delivered, window=tag[0], sub=tag[1])
            delivered_cb(tag, delivered)

        self.loop.schedule_at(arrive, ue_rx)

    # -- taps ---------------------------------------------------------------------

    def _tap(self, name: str, t_us: int, data: bytes) -> None:
        frames = self.taps.get(name)
        if frames is not None:
            frames.append((t_us, data))
