"""Minimal classic-pcap reader/writer for tap exports.

Captures are raw IPv4 packets (LINKTYPE_RAW, 101) with microsecond
timestamps, so any standard dissector can open them.  The reader also
accepts the byte-swapped and nanosecond magic variants.
"""

from __future__ import annotations

import struct
from pathlib import Path

from .errors import CodecError

PCAP_MAGIC_US = 0xA1B2C3D4
PCAP_MAGIC_NS = 0xA1B23C4D
LINKTYPE_RAW = 101


def write_pcap(path: str | Path, packets: list[tuple[int, bytes]], linktype: int = LINKTYPE_RAW) -> None:
    """Write (timestamp_us, raw bytes) records to a classic pcap file."""
    with open(path, "wb") as handle:
        handle.write(struct.pack("<IHHiIII", PCAP_MAGIC_US, 2, 4, 0, 0, 65535, linktype))
        for t_us, data in packets:
            sec, usec = divmod(t_us, 1_000_000)
            handle.write(struct.pack("<IIII", sec, usec, len(data), len(data)))
            handle.write(data)


def read_pcap(path: str | Path) -> list[tuple[int, bytes]]:
    """Read a classic pcap file back into (timestamp_us, bytes) records."""
    raw = Path(path).read_bytes()
    if len(raw) < 24:
        raise CodecError(f"{path}: too short to be a pcap file")
    magic = struct.unpack("<I", raw[:4])[0]
    if magic in (PCAP_MAGIC_US, PCAP_MAGIC_NS):
        endian = "<"
    elif magic in (struct.unpack(">I", struct.pack("<I", PCAP_MAGIC_US))[0],
                   struct.unpack(">I", struct.pack("<I", PCAP_MAGIC_NS))[0]):
        endian = ">"
        magic = struct.unpack(">I", raw[:4])[0]
    else:
        raise CodecError(f"{path}: unknown pcap magic {magic:#x}")
    nanos = magic == PCAP_MAGIC_NS
    packets: list[tuple[int, bytes]] = []
    offset = 24
    while offset < len(raw):
        if offset + 16 > len(raw):
            raise CodecError(f"{path}: truncated packet record header")
        sec, frac, caplen, _origlen = struct.unpack(f"{endian}IIII", raw[offset : offset + 16])
        offset += 16
        if offset + caplen > len(raw):
            raise CodecError(f"{path}: truncated packet body")
        t_us = sec * 1_000_000 + (frac // 1000 if nanos else frac)
        packets.append((t_us, raw[offset : offset + caplen]))
        offset += caplen
    return packets
