#!/usr/bin/env python3
"""User-plane wire formats: GTP-U encapsulation, taps, and pcap export.

Shows the exact bytes a ping takes through the tunnel: inner IPv4/ICMP,
the 8-byte G-PDU header in front of it, and a pcap file any dissector
can open.
"""

from pathlib import Path

from nrusim.pcapio import read_pcap, write_pcap
from nrusim.userplane import (
    decode_gtpu,
    decode_ip,
    encode_gtpu,
    encode_ip,
    icmp_echo_request,
)


def hexdump(data: bytes, width: int = 16) -> str:
    lines = []
    for off in range(0, len(data), width):
        chunk = data[off : off + width]
        lines.append(f"  {off:04x}  {chunk.hex(' ')}")
    return "\n".join(lines)


# A standard 56-byte-payload echo request: 84 bytes on the wire.
ping = icmp_echo_request("12.1.1.2", "172.217.167.78", ident=0x1000, seq=1)
inner = encode_ip(ping)
print(f"inner ICMP echo request ({len(inner)} bytes):")
print(hexdump(inner[:32]), "\n  ...")

# The gNB wraps it into a G-PDU toward the UPF.  Flag-free header:
# version 1, PT 1, message type 255, 16-bit length, 32-bit TEID.
frame = encode_gtpu(1, inner)
print(f"\nGTP-U frame ({len(frame)} bytes), header {frame[:8].hex(' ')}")

teid, recovered = decode_gtpu(frame)
assert recovered == inner and teid == 1
print(f"decode round-trip OK (TEID {teid})")

pkt = decode_ip(recovered)
print(f"inner parses back to {pkt.src} -> {pkt.dst} "
      f"ICMP type {pkt.icmp_type} id {pkt.icmp_id:#x} seq {pkt.icmp_seq}")

# Tap captures export as classic pcap (raw IPv4 link type) so third-party
# dissectors can verify the byte layout independently.
out = Path("out")
out.mkdir(exist_ok=True)
capture = out / "gtpu_demo.pcap"
write_pcap(capture, [(0, inner), (20_000, frame)])
frames = read_pcap(capture)
print(f"\nwrote {capture} with {len(frames)} frames; timestamps {[t for t, _ in frames]} us")
