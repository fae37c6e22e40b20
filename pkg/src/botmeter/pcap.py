"""Classic pcap reading and packet decoding.

Only the classic libpcap container is handled (both byte orders, micro- and
nanosecond timestamp variants); pcapng is rejected.  Link layers: Ethernet
(with 802.1Q tags), raw IP and the BSD loopback pseudo-header.  Anything the
decoder cannot attribute to a TCP/UDP/ICMP-over-IP packet is skipped and
counted, never fatal.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator

from .errors import PcapFormatError

# TCP flag bits, low to high: FIN SYN RST PSH ACK URG ECE CWR
FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10
URG = 0x20
ECE = 0x40
CWR = 0x80

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_ICMPV6 = 58
PROTO_UDP = 17

LINKTYPE_NULL = 0
LINKTYPE_ETHERNET = 1
LINKTYPE_RAW = 101

_MAGICS = {
    b"\xd4\xc3\xb2\xa1": ("<", 1),       # little endian, microseconds
    b"\xa1\xb2\xc3\xd4": (">", 1),       # big endian, microseconds
    b"\x4d\x3c\xb2\xa1": ("<", 1_000),   # little endian, nanoseconds
    b"\xa1\xb2\x3c\x4d": (">", 1_000),   # big endian, nanoseconds
}


@dataclass(frozen=True)
class PacketRecord:
    """One decoded IP packet, the raw input unit of flow metering.

    IP addresses are kept in packed network byte order; ``payload_len`` is
    transport payload bytes and ``header_len`` is IP header plus transport
    header bytes.  ``tcp_window`` is None for anything that is not TCP.
    """

    timestamp_us: int
    src_ip: bytes
    dst_ip: bytes
    src_port: int
    dst_port: int
    protocol: int
    payload_len: int
    header_len: int
    tcp_flags: int = 0
    tcp_window: int | None = None

    @property
    def src_ip_str(self) -> str:
        return ip_to_str(self.src_ip)

    @property
    def dst_ip_str(self) -> str:
        return ip_to_str(self.dst_ip)


@dataclass
class CaptureStats:
    """Per-capture bookkeeping: what was read, decoded and skipped."""

    records: int = 0
    decoded: int = 0
    skipped_link: int = 0       # non-IP frames (ARP, unknown link payloads...)
    skipped_protocol: int = 0   # IP but not TCP/UDP/ICMP
    skipped_fragment: int = 0   # non-first IP fragments (no reassembly)
    truncated: int = 0          # record too short to decode headers
    flows: int = 0

    @property
    def skipped(self) -> int:
        return (self.skipped_link + self.skipped_protocol
                + self.skipped_fragment + self.truncated)


def ip_to_str(packed: bytes) -> str:
    fam = socket.AF_INET if len(packed) == 4 else socket.AF_INET6
    return socket.inet_ntop(fam, packed)


def ip_from_str(text: str) -> bytes:
    if ":" in text:
        return socket.inet_pton(socket.AF_INET6, text)
    return socket.inet_pton(socket.AF_INET, text)


def read_capture(path: str, stats: CaptureStats | None = None) -> Iterator[PacketRecord]:
    """Yield decoded packets from a classic pcap file.

    Raises OSError for unreadable files and PcapFormatError for files that do
    not start with a known pcap magic.  Truncated or undecodable records bump
    the corresponding ``stats`` counter and are skipped.
    """
    if stats is None:
        stats = CaptureStats()
    with open(path, "rb") as fh:
        yield from _read_stream(fh, stats)


def _read_stream(fh: BinaryIO, stats: CaptureStats) -> Iterator[PacketRecord]:
    head = fh.read(24)
    if len(head) < 24:
        raise PcapFormatError("file too short for a pcap global header")
    try:
        endian, ts_divisor = _MAGICS[head[:4]]
    except KeyError:
        raise PcapFormatError(
            f"not a classic pcap file (magic {head[:4].hex()})") from None
    linktype = struct.unpack(endian + "I", head[20:24])[0]
    rec_hdr = struct.Struct(endian + "IIII")

    while True:
        hdr = fh.read(16)
        if not hdr:
            return
        if len(hdr) < 16:
            stats.records += 1
            stats.truncated += 1
            return
        ts_sec, ts_frac, incl_len, _orig_len = rec_hdr.unpack(hdr)
        data = fh.read(incl_len)
        stats.records += 1
        if len(data) < incl_len:
            stats.truncated += 1
            return
        ts_us = ts_sec * 1_000_000 + ts_frac // ts_divisor
        pkt = _decode_frame(linktype, data, ts_us, stats)
        if pkt is not None:
            stats.decoded += 1
            yield pkt


def _decode_frame(linktype: int, data: bytes, ts_us: int,
                  stats: CaptureStats) -> PacketRecord | None:
    if linktype == LINKTYPE_ETHERNET:
        if len(data) < 14:
            stats.truncated += 1
            return None
        ethertype = struct.unpack("!H", data[12:14])[0]
        offset = 14
        # Peel 802.1Q / 802.1ad tags.
        while ethertype in (0x8100, 0x88A8):
            if len(data) < offset + 4:
                stats.truncated += 1
                return None
            ethertype = struct.unpack("!H", data[offset + 2:offset + 4])[0]
            offset += 4
        if ethertype == 0x0800:
            return _decode_ipv4(data[offset:], ts_us, stats)
        if ethertype == 0x86DD:
            return _decode_ipv6(data[offset:], ts_us, stats)
        stats.skipped_link += 1
        return None
    if linktype == LINKTYPE_RAW:
        return _decode_ip_auto(data, ts_us, stats)
    if linktype == LINKTYPE_NULL:
        if len(data) < 4:
            stats.truncated += 1
            return None
        return _decode_ip_auto(data[4:], ts_us, stats)
    stats.skipped_link += 1
    return None


def _decode_ip_auto(data: bytes, ts_us: int, stats: CaptureStats) -> PacketRecord | None:
    if not data:
        stats.truncated += 1
        return None
    version = data[0] >> 4
    if version == 4:
        return _decode_ipv4(data, ts_us, stats)
    if version == 6:
        return _decode_ipv6(data, ts_us, stats)
    stats.skipped_link += 1
    return None


def _decode_ipv4(data: bytes, ts_us: int, stats: CaptureStats) -> PacketRecord | None:
    if len(data) < 20 or data[0] >> 4 != 4:
        stats.truncated += 1
        return None
    ihl = (data[0] & 0x0F) * 4
    if ihl < 20 or len(data) < ihl:
        stats.truncated += 1
        return None
    total_len = struct.unpack("!H", data[2:4])[0]
    frag = struct.unpack("!H", data[6:8])[0]
    if frag & 0x1FFF or frag & 0x2000:  # offset != 0 or more-fragments set
        stats.skipped_fragment += 1
        return None
    protocol = data[9]
    src, dst = data[12:16], data[16:20]
    return _decode_transport(data[ihl:], ts_us, src, dst, protocol,
                             ip_header_len=ihl,
                             ip_payload_len=max(total_len - ihl, 0),
                             stats=stats)


def _decode_ipv6(data: bytes, ts_us: int, stats: CaptureStats) -> PacketRecord | None:
    if len(data) < 40 or data[0] >> 4 != 6:
        stats.truncated += 1
        return None
    payload_len = struct.unpack("!H", data[4:6])[0]
    next_header = data[6]
    src, dst = data[8:24], data[24:40]
    if next_header not in (PROTO_TCP, PROTO_UDP, PROTO_ICMPV6):
        # Extension headers and other protocols are out of scope.
        stats.skipped_protocol += 1
        return None
    return _decode_transport(data[40:], ts_us, src, dst, next_header,
                             ip_header_len=40, ip_payload_len=payload_len,
                             stats=stats)


def _decode_transport(data: bytes, ts_us: int, src: bytes, dst: bytes,
                      protocol: int, ip_header_len: int, ip_payload_len: int,
                      stats: CaptureStats) -> PacketRecord | None:
    if protocol == PROTO_TCP:
        if len(data) < 20:
            stats.truncated += 1
            return None
        sport, dport = struct.unpack("!HH", data[:4])
        data_offset = (data[12] >> 4) * 4
        if data_offset < 20 or len(data) < data_offset:
            stats.truncated += 1
            return None
        flags = data[13]
        window = struct.unpack("!H", data[14:16])[0]
        return PacketRecord(
            timestamp_us=ts_us, src_ip=src, dst_ip=dst,
            src_port=sport, dst_port=dport, protocol=protocol,
            payload_len=max(ip_payload_len - data_offset, 0),
            header_len=ip_header_len + data_offset,
            tcp_flags=flags, tcp_window=window)
    if protocol == PROTO_UDP:
        if len(data) < 8:
            stats.truncated += 1
            return None
        sport, dport, udp_len = struct.unpack("!HHH", data[:6])
        return PacketRecord(
            timestamp_us=ts_us, src_ip=src, dst_ip=dst,
            src_port=sport, dst_port=dport, protocol=protocol,
            payload_len=max(udp_len - 8, 0),
            header_len=ip_header_len + 8)
    if protocol in (PROTO_ICMP, PROTO_ICMPV6):
        if len(data) < 8:
            stats.truncated += 1
            return None
        return PacketRecord(
            timestamp_us=ts_us, src_ip=src, dst_ip=dst,
            src_port=0, dst_port=0, protocol=protocol,
            payload_len=max(ip_payload_len - 8, 0),
            header_len=ip_header_len + 8)
    stats.skipped_protocol += 1
    return None
