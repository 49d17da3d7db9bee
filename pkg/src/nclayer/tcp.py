"""A small Reno-style TCP: bulk sender and cumulative-ACK sink.

Sequence numbers count segments, not bytes: the SYN uses ``isn`` and data
segment ``i`` (0-based) uses ``isn + 1 + i``. Every data segment except
possibly the last carries exactly ``mss`` bytes.
"""
from __future__ import annotations

import enum
import math
from typing import Callable, Iterable

from .errors import HandshakeTimeout
from .headers import Flag, TcpSegment, mss_option

DEFAULT_MSS = 1460
DEFAULT_RWND = 65535


class Phase(enum.Enum):
    SLOW_START = "slow_start"
    CONGESTION_AVOIDANCE = "congestion_avoidance"


class ConnState(enum.Enum):
    CLOSED = "closed"
    SYN_SENT = "syn_sent"
    SYN_RECEIVED = "syn_received"
    ESTABLISHED = "established"
    FIN_WAIT = "fin_wait"
    DONE = "done"


def bulk_payload(seq: int, size: int) -> bytes:
    """Deterministic filler data for an endless FTP-style transfer."""
    stamp = (seq & 0xFFFFFFFF).to_bytes(4, "big")
    return (stamp * (size // 4 + 1))[:size]


class TcpSender:
    """Sending endpoint. Call ``connect`` first, then feed data with ``write``.

    With ``bulk=True`` the application always has more data (an FTP
    source); otherwise the byte stream is whatever was written, and
    ``close`` sends the trailing partial segment and then a FIN.
    """

    def __init__(
        self,
        src_port: int = 5000,
        dst_port: int = 21,
        mss: int = DEFAULT_MSS,
        isn: int = 0,
        rwnd: int = DEFAULT_RWND,
        initial_rto: float = 1.0,
        min_rto: float = 0.2,
        max_rto: float = 64.0,
        max_syn_retries: int = 4,
        bulk: bool = False,
    ):
        self.src_port = src_port
        self.dst_port = dst_port
        self.mss_offer = mss
        self.mss = mss
        self.isn = isn
        self.rwnd = rwnd
        self.min_rto = min_rto
        self.max_rto = max_rto
        self.max_syn_retries = max_syn_retries
        self.bulk = bulk

        self.state = ConnState.CLOSED
        self.cwnd = 1.0
        self.ssthresh = float(rwnd // mss)
        self.rto = initial_rto
        self.srtt: float | None = None
        self.rttvar: float | None = None
        self.send_base = isn + 1
        self.next_seq = isn + 1
        self.dup_ack_count = 0
        self.deadline: float | None = None
        self.rcv_next = 0

        self._stream = bytearray()
        self._final = False
        self._fin_sent = False
        self._syn_retries = 0
        self._syn_at = 0.0
        self._sent_at: dict[int, float] = {}
        self._retransmitted: set[int] = set()
        self._high_water = isn + 1

        self.segments_sent = 0
        self.retransmissions = 0
        self.timeouts = 0
        self.fast_retransmits = 0

    @property
    def phase(self) -> Phase:
        return Phase.SLOW_START if self.cwnd < self.ssthresh else Phase.CONGESTION_AVOIDANCE

    @property
    def in_flight(self) -> int:
        return self.next_seq - self.send_base

    @property
    def rwnd_segments(self) -> int:
        return max(1, self.rwnd // self.mss)

    @property
    def fin_seq(self) -> int:
        return self.isn + 1 + self._total_segments()

    def _total_segments(self) -> int:
        n = len(self._stream) // self.mss
        if self._final and len(self._stream) % self.mss:
            n += 1
        return n

    def _has_segment(self, seq: int) -> bool:
        return self.bulk or seq - self.isn - 1 < self._total_segments()

    def _payload(self, seq: int) -> bytes:
        if self.bulk:
            return bulk_payload(seq, self.mss)
        i = seq - self.isn - 1
        return bytes(self._stream[i * self.mss:(i + 1) * self.mss])

    def _segment(self, seq: int, now: float, retransmit: bool = False) -> TcpSegment:
        if seq < self._high_water:
            retransmit = True
        self._high_water = max(self._high_water, seq + 1)
        if retransmit:
            self._retransmitted.add(seq)
            self.retransmissions += 1
        self._sent_at[seq] = now
        self.segments_sent += 1
        return TcpSegment(
            self.src_port, self.dst_port, seq, ack_no=self.rcv_next,
            flags=Flag.ACK, payload=self._payload(seq),
        )

    def _syn(self) -> TcpSegment:
        return TcpSegment(
            self.src_port, self.dst_port, self.isn, flags=Flag.SYN,
            options=mss_option(self.mss_offer),
        )

    def _fin(self) -> TcpSegment:
        return TcpSegment(
            self.src_port, self.dst_port, self.fin_seq, ack_no=self.rcv_next,
            flags=Flag.FIN | Flag.ACK,
        )

    def _arm(self, now: float):
        self.deadline = now + self.rto

    # -- application side ---------------------------------------------

    def connect(self, now: float = 0.0) -> list[TcpSegment]:
        self.state = ConnState.SYN_SENT
        self._syn_at = now
        self._arm(now)
        return [self._syn()]

    def write(self, data: bytes, now: float = 0.0) -> list[TcpSegment]:
        """Queue application bytes; returns whatever the window lets out."""
        self._stream += data
        return self._send_new(now)

    def close(self, now: float = 0.0) -> list[TcpSegment]:
        """No more data: flush the tail segment and FIN once all is acked."""
        self._final = True
        return self._send_new(now)

    @property
    def finished(self) -> bool:
        return self.state is ConnState.DONE

    def _send_new(self, now: float) -> list[TcpSegment]:
        if self.state is not ConnState.ESTABLISHED:
            return []
        out = []
        limit = min(math.floor(self.cwnd), self.rwnd_segments)
        while self.in_flight < limit and self._has_segment(self.next_seq):
            out.append(self._segment(self.next_seq, now))
            self.next_seq += 1
        if out and self.deadline is None:
            self._arm(now)
        if (
            self._final and not self.bulk and not self._fin_sent
            and self.send_base == self.fin_seq
        ):
            self._fin_sent = True
            self.state = ConnState.FIN_WAIT
            self._arm(now)
            out.append(self._fin())
        return out

    # -- network side -------------------------------------------------

    def on_segment(self, seg: TcpSegment, now: float = 0.0) -> list[TcpSegment]:
        if seg.flags & Flag.RST:
            self.state = ConnState.CLOSED
            self.deadline = None
            return []
        if seg.flags & Flag.SYN:
            if self.state is not ConnState.SYN_SENT:
                return [self._pure_ack()]
            offered = seg.mss if seg.mss is not None else 536
            self.mss = min(self.mss_offer, offered)
            self.ssthresh = float(self.rwnd_segments)
            self.rcv_next = seg.seq_no + 1
            self.state = ConnState.ESTABLISHED
            self.deadline = None
            if self._syn_retries == 0:
                self._rtt_sample(now - self._syn_at)
            else:
                self.rto = max(self.rto, 3.0)  # RFC 6298 fallback after SYN loss
            return [self._pure_ack()] + self._send_new(now)
        if seg.flags & Flag.FIN:
            if self.state is ConnState.FIN_WAIT:
                self.state = ConnState.DONE
                self.deadline = None
            self.rcv_next = seg.seq_no + 1
            return [self._pure_ack()]
        if seg.flags & Flag.ACK:
            return self.on_ack(seg.ack_no, now)
        return []

    def _pure_ack(self) -> TcpSegment:
        return TcpSegment(
            self.src_port, self.dst_port, self.next_seq, ack_no=self.rcv_next, flags=Flag.ACK
        )

    def _rtt_sample(self, rtt: float):
        if self.srtt is None:
            self.srtt = rtt
            self.rttvar = rtt / 2
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - rtt)
            self.srtt = 0.875 * self.srtt + 0.125 * rtt
        self.rto = min(max(self.srtt + 4 * self.rttvar, self.min_rto), self.max_rto)

    def on_ack(self, ack_no: int, now: float = 0.0) -> list[TcpSegment]:
        """Window update on a cumulative ACK, with fast retransmit on 3 dups."""
        if self.state not in (ConnState.ESTABLISHED, ConnState.FIN_WAIT):
            return []
        if ack_no > self.send_base:
            newest = min(ack_no, self.next_seq) - 1
            if newest in self._sent_at and newest not in self._retransmitted:
                self._rtt_sample(now - self._sent_at[newest])
            elif self.srtt is not None:
                self.rto = min(max(self.srtt + 4 * self.rttvar, self.min_rto), self.max_rto)
            for seq in range(self.send_base, ack_no):
                self._sent_at.pop(seq, None)
                self._retransmitted.discard(seq)
            acked = ack_no - self.send_base
            self.send_base = ack_no
            self.next_seq = max(self.next_seq, ack_no)
            self.dup_ack_count = 0
            # appropriate byte counting: growth follows segments acked, not ACKs
            if self.cwnd < self.ssthresh:
                self.cwnd += acked
            else:
                self.cwnd += acked / self.cwnd
            self.cwnd = min(self.cwnd, float(self.rwnd_segments))
            self.deadline = None
            if self.in_flight > 0 or self.state is ConnState.FIN_WAIT:
                self._arm(now)
            return self._send_new(now)
        if ack_no == self.send_base and self.in_flight > 0:
            self.dup_ack_count += 1
            if self.dup_ack_count == 3:
                self.ssthresh = max(self.cwnd / 2, 2.0)
                self.cwnd = self.ssthresh
                self.fast_retransmits += 1
                return [self._segment(self.send_base, now, retransmit=True)]
        return []

    def on_timeout(self, now: float = 0.0) -> list[TcpSegment]:
        if self.state is ConnState.SYN_SENT:
            self._syn_retries += 1
            if self._syn_retries > self.max_syn_retries:
                self.state = ConnState.CLOSED
                self.deadline = None
                raise HandshakeTimeout(f"no SYN-ACK after {self._syn_retries} SYNs")
            self.rto = min(2 * self.rto, self.max_rto)
            self._arm(now)
            return [self._syn()]
        if self.state is ConnState.FIN_WAIT and self.in_flight == 0:
            self.rto = min(2 * self.rto, self.max_rto)
            self._arm(now)
            return [self._fin()]
        if self.state is not ConnState.ESTABLISHED and self.state is not ConnState.FIN_WAIT:
            self.deadline = None
            return []
        if self.in_flight == 0:
            self.deadline = None
            return []
        self.timeouts += 1
        self.ssthresh = max(self.cwnd / 2, 2.0)
        self.cwnd = 1.0
        self.dup_ack_count = 0
        self.rto = min(2 * self.rto, self.max_rto)
        # go back N: everything after send_base is sent again as the window reopens
        self.next_seq = self.send_base + 1
        self._arm(now)
        return [self._segment(self.send_base, now, retransmit=True)]

    on_timer = on_timeout


class TcpSink:
    """Receiving endpoint: in-order delivery, cumulative ACK per segment."""

    def __init__(
        self,
        src_port: int = 21,
        dst_port: int = 5000,
        mss: int = DEFAULT_MSS,
        isn: int = 0,
        keep_data: bool = True,
        on_deliver: Callable[[int, bytes, float], None] | None = None,
    ):
        self.src_port = src_port
        self.dst_port = dst_port
        self.mss_offer = mss
        self.mss = mss
        self.isn = isn
        self.keep_data = keep_data
        self.on_deliver = on_deliver
        self.state = ConnState.CLOSED
        self.rcv_next = 0
        self.data = bytearray()
        self.delivered_segments = 0
        self.duplicates = 0
        self._out_of_order: dict[int, bytes] = {}
        self.deadline = None

    def _ack(self, flags: Flag = Flag.ACK, seq: int | None = None) -> TcpSegment:
        return TcpSegment(
            self.src_port, self.dst_port, self.isn + 1 if seq is None else seq,
            ack_no=self.rcv_next, flags=flags,
        )

    def _deliver(self, seq: int, payload: bytes, now: float):
        self.delivered_segments += 1
        if self.keep_data:
            self.data += payload
        if self.on_deliver is not None:
            self.on_deliver(seq, payload, now)

    def on_segment(self, seg: TcpSegment, now: float = 0.0) -> list[TcpSegment]:
        if seg.flags & Flag.RST:
            self.state = ConnState.CLOSED
            return []
        if seg.flags & Flag.SYN:
            offered = seg.mss if seg.mss is not None else 536
            self.mss = min(self.mss_offer, offered)
            self.rcv_next = seg.seq_no + 1
            self.state = ConnState.SYN_RECEIVED
            return [TcpSegment(
                self.src_port, self.dst_port, self.isn, ack_no=self.rcv_next,
                flags=Flag.SYN | Flag.ACK, options=mss_option(self.mss_offer),
            )]
        if seg.flags & Flag.FIN:
            if seg.seq_no == self.rcv_next:
                self.rcv_next += 1
                self.state = ConnState.DONE
            if self.state is ConnState.DONE:
                return [self._ack(Flag.FIN | Flag.ACK)]
            return [self._ack()]
        if self.state is ConnState.SYN_RECEIVED:
            self.state = ConnState.ESTABLISHED
        if not seg.payload:
            return []
        if seg.seq_no == self.rcv_next:
            self._deliver(seg.seq_no, seg.payload, now)
            self.rcv_next += 1
            while self.rcv_next in self._out_of_order:
                self._deliver(self.rcv_next, self._out_of_order.pop(self.rcv_next), now)
                self.rcv_next += 1
        elif seg.seq_no > self.rcv_next and seg.seq_no not in self._out_of_order:
            self._out_of_order[seg.seq_no] = seg.payload
        else:
            self.duplicates += 1
        return [self._ack()]


def handshake(
    initiator: TcpSender,
    responder: TcpSink,
    forward: Callable[[TcpSegment], Iterable[TcpSegment]] = lambda s: [s],
    backward: Callable[[TcpSegment], Iterable[TcpSegment]] = lambda s: [s],
) -> int:
    """Run the three-way handshake over the given paths; return the MSS.

    ``forward``/``backward`` map a segment leaving one endpoint to the
    segments the other endpoint sees (none if lost). Lost SYNs are retried
    on the initiator's timer until ``HandshakeTimeout``.
    """
    now = 0.0
    out = initiator.connect(now)
    while initiator.state is ConnState.SYN_SENT:
        replies = [r for s in out for d in forward(s) for r in responder.on_segment(d, now)]
        out = [o for r in replies for b in backward(r) for o in initiator.on_segment(b, now)]
        if initiator.state is ConnState.SYN_SENT:
            now = initiator.deadline
            out = initiator.on_timeout(now)
    for s in out:
        for d in forward(s):
            responder.on_segment(d, now)
    return initiator.mss
