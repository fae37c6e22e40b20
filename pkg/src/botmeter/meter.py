"""Bidirectional flow assembly from decoded packets.

A flow is the set of packets sharing a canonical bidirectional 5-tuple,
bounded by idle timeout or TCP termination.  The forward direction is the
direction of the flow's first observed packet.  Timeout checks are lazy:
a live flow is only aged out when another packet of the same key arrives
(or at end of capture, when every residual flow is flushed).
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass

from .errors import ValidationError
from .pcap import (ACK, FIN, RST, CaptureStats, PacketRecord,
                   read_capture)
from .stats import RunningStats

DEFAULT_FLOW_TIMEOUT_US = 120_000_000
DEFAULT_ACTIVITY_TIMEOUT_US = 5_000_000

# RFC1918 v4 ranges plus the v6 unique-local block: the default "inside".
DEFAULT_HOME_PREFIXES = (
    "10.0.0.0/8",
    "172.16.0.0/12",
    "192.168.0.0/16",
    "fc00::/7",
)


@dataclass(frozen=True)
class MeterConfig:
    """Flow metering parameters.

    Packet length basis is fixed to transport payload bytes; header bytes
    only feed the Fwd/Bwd Header Length features.
    """

    flow_timeout_us: int = DEFAULT_FLOW_TIMEOUT_US
    activity_timeout_us: int = DEFAULT_ACTIVITY_TIMEOUT_US
    home_prefixes: tuple[str, ...] = DEFAULT_HOME_PREFIXES

    def __post_init__(self):
        if not self.flow_timeout_us > self.activity_timeout_us > 0:
            raise ValidationError(
                "flow_timeout_us must exceed activity_timeout_us, both > 0 "
                f"(got {self.flow_timeout_us}, {self.activity_timeout_us})")

    def home_networks(self):
        return [ipaddress.ip_network(p) for p in self.home_prefixes]


@dataclass(frozen=True)
class FlowKey:
    """Canonical bidirectional 5-tuple: endpoint (a) sorts before (b)."""

    ip_a: bytes
    port_a: int
    ip_b: bytes
    port_b: int
    protocol: int

    @classmethod
    def of(cls, pkt: PacketRecord) -> "FlowKey":
        a = (pkt.src_ip, pkt.src_port)
        b = (pkt.dst_ip, pkt.dst_port)
        if a > b:
            a, b = b, a
        return cls(a[0], a[1], b[0], b[1], pkt.protocol)


class FlowAccumulator:
    """In-progress state for one flow; updated packet by packet."""

    __slots__ = (
        "key", "fwd_ip", "fwd_port", "dst_ip", "dst_port", "protocol",
        "first_ts_us", "last_ts_us", "fwd_len", "bwd_len", "all_len",
        "flow_iat", "fwd_iat", "bwd_iat", "fwd_last_ts", "bwd_last_ts",
        "fwd_header_bytes", "bwd_header_bytes", "flag_counts",
        "fwd_psh", "bwd_psh", "fwd_urg", "bwd_urg",
        "init_fwd_win", "init_bwd_win", "active", "idle",
        "activity_start_ts", "activity_last_ts",
        "fwd_fin", "bwd_fin", "rst_seen",
    )

    def __init__(self, first: PacketRecord):
        self.key = FlowKey.of(first)
        self.fwd_ip = first.src_ip
        self.fwd_port = first.src_port
        self.dst_ip = first.dst_ip
        self.dst_port = first.dst_port
        self.protocol = first.protocol
        self.first_ts_us = first.timestamp_us
        self.last_ts_us = first.timestamp_us
        self.fwd_len = RunningStats()
        self.bwd_len = RunningStats()
        self.all_len = RunningStats()
        self.flow_iat = RunningStats()
        self.fwd_iat = RunningStats()
        self.bwd_iat = RunningStats()
        self.fwd_last_ts: int | None = None
        self.bwd_last_ts: int | None = None
        self.fwd_header_bytes = 0
        self.bwd_header_bytes = 0
        self.flag_counts = {f: 0 for f in "FSRPAUCE"}  # FIN SYN RST PSH ACK URG CWR ECE
        self.fwd_psh = 0
        self.bwd_psh = 0
        self.fwd_urg = 0
        self.bwd_urg = 0
        self.init_fwd_win = -1
        self.init_bwd_win = -1
        self.active = RunningStats()
        self.idle = RunningStats()
        self.activity_start_ts = first.timestamp_us
        self.activity_last_ts = first.timestamp_us
        self.fwd_fin = 0
        self.bwd_fin = 0
        self.rst_seen = False
        self._ingest(first, forward=True, first_packet=True)

    def is_forward(self, pkt: PacketRecord) -> bool:
        return (pkt.src_ip, pkt.src_port) == (self.fwd_ip, self.fwd_port)

    @property
    def total_packets(self) -> int:
        return self.all_len.count

    def both_fins_seen(self) -> bool:
        return self.fwd_fin > 0 and self.bwd_fin > 0

    def add(self, pkt: PacketRecord, activity_timeout_us: int) -> None:
        """Attribute one more packet to this flow."""
        gap = pkt.timestamp_us - self.activity_last_ts
        if gap > activity_timeout_us:
            self.active.add(self.activity_last_ts - self.activity_start_ts)
            self.idle.add(gap)
            self.activity_start_ts = pkt.timestamp_us
            self.activity_last_ts = pkt.timestamp_us
        else:
            self.activity_last_ts = pkt.timestamp_us
        self.flow_iat.add(pkt.timestamp_us - self.last_ts_us)
        self.last_ts_us = pkt.timestamp_us
        self._ingest(pkt, forward=self.is_forward(pkt), first_packet=False)

    def _ingest(self, pkt: PacketRecord, forward: bool, first_packet: bool) -> None:
        self.all_len.add(pkt.payload_len)
        if forward:
            self.fwd_len.add(pkt.payload_len)
            self.fwd_header_bytes += pkt.header_len
            if self.fwd_last_ts is not None:
                self.fwd_iat.add(pkt.timestamp_us - self.fwd_last_ts)
            self.fwd_last_ts = pkt.timestamp_us
            if pkt.tcp_window is not None and self.init_fwd_win < 0:
                self.init_fwd_win = pkt.tcp_window
        else:
            self.bwd_len.add(pkt.payload_len)
            self.bwd_header_bytes += pkt.header_len
            if self.bwd_last_ts is not None:
                self.bwd_iat.add(pkt.timestamp_us - self.bwd_last_ts)
            self.bwd_last_ts = pkt.timestamp_us
            if pkt.tcp_window is not None and self.init_bwd_win < 0:
                self.init_bwd_win = pkt.tcp_window

        flags = pkt.tcp_flags
        if flags:
            for bit, name in ((FIN, "F"), (0x02, "S"), (RST, "R"), (0x08, "P"),
                              (ACK, "A"), (0x20, "U"), (0x80, "C"), (0x40, "E")):
                if flags & bit:
                    self.flag_counts[name] += 1
            if flags & 0x08:
                if forward:
                    self.fwd_psh += 1
                else:
                    self.bwd_psh += 1
            if flags & 0x20:
                if forward:
                    self.fwd_urg += 1
                else:
                    self.bwd_urg += 1
            if flags & FIN:
                if forward:
                    self.fwd_fin += 1
                else:
                    self.bwd_fin += 1
            if flags & RST:
                self.rst_seen = True

    def close_activity(self) -> None:
        """Record the trailing active period; call exactly once, at finalize."""
        self.active.add(self.activity_last_ts - self.activity_start_ts)


class FlowTable:
    """Single-writer table of live flows keyed by canonical 5-tuple."""

    def __init__(self, config: MeterConfig | None = None):
        self.config = config or MeterConfig()
        self._live: dict[FlowKey, FlowAccumulator] = {}

    def offer_packet(self, pkt: PacketRecord) -> list[FlowAccumulator]:
        """Feed one packet; return any flows this packet finalized.

        A live flow idle for at least the flow timeout (relative to the
        arriving packet) is emitted and replaced by a fresh flow whose
        forward direction is set by the packet.  A TCP flow ends on any RST,
        or on the first ACK after FINs were seen in both directions.
        """
        key = FlowKey.of(pkt)
        finalized: list[FlowAccumulator] = []
        flow = self._live.get(key)
        if flow is not None and pkt.timestamp_us - flow.last_ts_us >= self.config.flow_timeout_us:
            finalized.append(self._finalize(key))
            flow = None
        if flow is None:
            self._live[key] = FlowAccumulator(pkt)
            if pkt.tcp_flags & RST:
                finalized.append(self._finalize(key))
            return finalized
        ends_by_ack = flow.both_fins_seen() and bool(pkt.tcp_flags & ACK)
        flow.add(pkt, self.config.activity_timeout_us)
        if pkt.tcp_flags & RST or ends_by_ack:
            finalized.append(self._finalize(key))
        return finalized

    def flush(self) -> list[FlowAccumulator]:
        """Finalize all residual flows in flow-start order."""
        return [self._finalize(key) for key in list(self._live)]

    def _finalize(self, key: FlowKey) -> FlowAccumulator:
        flow = self._live.pop(key)
        flow.close_activity()
        return flow


def ingest_capture(path: str, config: MeterConfig | None = None):
    """Meter a capture file into finalized flow feature vectors."""
    flows, _ = ingest_capture_detailed(path, config)
    return flows


def ingest_capture_detailed(path: str, config: MeterConfig | None = None):
    """Like ingest_capture but also returns the CaptureStats counters."""
    from .features import compute_features

    config = config or MeterConfig()
    table = FlowTable(config)
    stats = CaptureStats()
    out = []
    for pkt in read_capture(path, stats):
        for flow in table.offer_packet(pkt):
            out.append(compute_features(flow, config))
    for flow in table.flush():
        out.append(compute_features(flow, config))
    stats.flows = len(out)
    return out, stats
