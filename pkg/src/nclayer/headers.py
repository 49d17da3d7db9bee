"""TCP segment model, NC header and the byte layouts that connect them.

The NC layer keeps the TCP fields it can reuse (ports, sequence number and
every control flag except ACK) in its own header and encodes the rest.
The encoded remainder of a TCP segment, the *body*, is::

    ack_no(32) | offset(4) reserved(6) ACK-bit-region(6) | window(16)
    | checksum(16) | urgent_ptr(16) | options | payload

i.e. 12 bytes of residual header, then the options (their length follows
from the data offset as in TCP), then the payload. Only the ACK bit of the
6-bit flag region is used; the other flags travel in the NC header.

NC wire format::

    src_port(16) | dst_port(16) | seq_no(32) | symbol_indicator(8)
    | flags(8) | nc_options_len(8) | nc_options | body
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace

from .errors import BadParams, MalformedBody, NoMssOption

RESIDUAL_HEADER_LEN = 12
NC_HEADER_LEN = 11
IP_HEADER_LEN = 20
TCP_HEADER_LEN = 20

_RESIDUAL = struct.Struct("!IHHHH")
_NC_FIXED = struct.Struct("!HHIBBB")

_TCP_ACK_BIT = 0x10  # position of ACK inside the offset/reserved/flags word

MSS_OPTION_KIND = 2


class Flag(enum.IntFlag):
    NONE = 0
    ACK = 0x01
    SYN = 0x02
    FIN = 0x04
    RST = 0x08


REUSED_FLAGS = Flag.SYN | Flag.FIN | Flag.RST


@dataclass(frozen=True)
class TcpSegment:
    src_port: int
    dst_port: int
    seq_no: int
    ack_no: int = 0
    flags: Flag = Flag.NONE
    window: int = 65535
    checksum: int = 0
    urgent_ptr: int = 0
    reserved: int = 0
    options: bytes = b""
    payload: bytes = b""

    def __post_init__(self):
        if len(self.options) % 4 or len(self.options) > 40:
            raise BadParams("TCP options must be padded to 4 bytes and at most 40 bytes")

    @property
    def data_offset(self) -> int:
        """Header length in 32-bit words."""
        return 5 + len(self.options) // 4

    @property
    def is_pure_ack(self) -> bool:
        return not self.payload and not (self.flags & REUSED_FLAGS)

    @property
    def mss(self) -> int | None:
        return parse_mss(self.options)

    @property
    def wire_size(self) -> int:
        """Bytes on the wire inside an IP packet without the NC layer."""
        return IP_HEADER_LEN + TCP_HEADER_LEN + len(self.options) + len(self.payload)


def mss_option(mss: int) -> bytes:
    return struct.pack("!BBH", MSS_OPTION_KIND, 4, mss)


def parse_mss(options: bytes) -> int | None:
    i = 0
    while i < len(options):
        kind = options[i]
        if kind == 0:  # end of option list
            return None
        if kind == 1:  # no-op
            i += 1
            continue
        if i + 1 >= len(options):
            return None
        length = options[i + 1]
        if kind == MSS_OPTION_KIND and length == 4 and i + 4 <= len(options):
            return struct.unpack_from("!H", options, i + 2)[0]
        if length < 2:
            return None
        i += length
    return None


@dataclass(frozen=True)
class NcHeader:
    src_port: int
    dst_port: int
    seq_no: int
    symbol_indicator: int = 0
    flags: Flag = Flag.NONE
    nc_options: bytes = b""

    @property
    def position(self) -> int:
        return position(self.seq_no, self.symbol_indicator)


@dataclass(frozen=True)
class NcSegment:
    header: NcHeader
    body: bytes = b""

    @property
    def is_ack(self) -> bool:
        return bool(self.header.flags & Flag.ACK)

    @property
    def is_control(self) -> bool:
        return bool(self.header.flags & REUSED_FLAGS)

    @property
    def wire_size(self) -> int:
        return IP_HEADER_LEN + NC_HEADER_LEN + len(self.header.nc_options) + len(self.body)

    def to_bytes(self) -> bytes:
        h = self.header
        if len(h.nc_options) > 255:
            raise BadParams("nc_options longer than 255 bytes")
        return _NC_FIXED.pack(
            h.src_port, h.dst_port, h.seq_no & 0xFFFFFFFF, h.symbol_indicator,
            int(h.flags), len(h.nc_options),
        ) + h.nc_options + self.body

    @classmethod
    def from_bytes(cls, data: bytes) -> "NcSegment":
        if len(data) < NC_HEADER_LEN:
            raise MalformedBody(f"{len(data)} bytes cannot hold an NC header")
        src, dst, seq, nu, flags, optlen = _NC_FIXED.unpack_from(data)
        if flags & ~int(Flag.ACK | REUSED_FLAGS):
            raise MalformedBody(f"unknown NC flag bits {flags:#04x}")
        end = NC_HEADER_LEN + optlen
        if len(data) < end:
            raise MalformedBody("truncated NC options")
        header = NcHeader(src, dst, seq, nu, Flag(flags), bytes(data[NC_HEADER_LEN:end]))
        return cls(header, bytes(data[end:]))


def position(mu: int, nu: int) -> int:
    """Position of a segment in the connection: ``2**8 * seq_no + symbol``."""
    return (mu << 8) + nu


def strip_header(seg: TcpSegment) -> tuple[NcHeader, bytes]:
    """Split a TCP segment into the reused NC header and the encoded body."""
    word = (seg.data_offset << 12) | ((seg.reserved & 0x3F) << 6)
    if seg.flags & Flag.ACK:
        word |= _TCP_ACK_BIT
    residual = _RESIDUAL.pack(
        seg.ack_no & 0xFFFFFFFF, word, seg.window, seg.checksum, seg.urgent_ptr
    )
    header = NcHeader(seg.src_port, seg.dst_port, seg.seq_no, 0, seg.flags & REUSED_FLAGS)
    return header, residual + seg.options + seg.payload


def restore_header(header: NcHeader, body: bytes) -> TcpSegment:
    """Inverse of :func:`strip_header`."""
    if len(body) < RESIDUAL_HEADER_LEN:
        raise MalformedBody(f"body of {len(body)} bytes is shorter than the residual header")
    ack_no, word, window, checksum, urgent = _RESIDUAL.unpack_from(body)
    offset = word >> 12
    if offset < 5:
        raise MalformedBody(f"data offset {offset} below the minimum of 5")
    opt_end = RESIDUAL_HEADER_LEN + (offset - 5) * 4
    if len(body) < opt_end:
        raise MalformedBody("body truncated inside the TCP options")
    flags = header.flags & REUSED_FLAGS
    if word & _TCP_ACK_BIT:
        flags |= Flag.ACK
    return TcpSegment(
        src_port=header.src_port,
        dst_port=header.dst_port,
        seq_no=header.seq_no,
        ack_no=ack_no,
        flags=flags,
        window=window,
        checksum=checksum,
        urgent_ptr=urgent,
        reserved=(word >> 6) & 0x3F,
        options=bytes(body[RESIDUAL_HEADER_LEN:opt_end]),
        payload=bytes(body[opt_end:]),
    )


def max_mss(segment_size: int) -> int:
    """Largest payload whose option-less body still fits one codec segment."""
    return segment_size - RESIDUAL_HEADER_LEN


def rewrite_mss(syn: TcpSegment, segment_size: int) -> TcpSegment:
    """Clamp the MSS option of a SYN so data bodies fit ``segment_size``."""
    offered = syn.mss if syn.flags & Flag.SYN else None
    if offered is None:
        raise NoMssOption("segment carries no MSS option")
    limit = max_mss(segment_size)
    if limit < 1:
        raise BadParams(f"segment_size {segment_size} leaves no room for payload")
    if offered <= limit:
        return syn
    opts = bytearray(syn.options)
    i = 0
    while i < len(opts):
        if opts[i] == 1:
            i += 1
            continue
        if opts[i] == MSS_OPTION_KIND:
            struct.pack_into("!H", opts, i + 2, limit)
            break
        i += opts[i + 1]
    return replace(syn, options=bytes(opts))
