"""Transmitter and receiver sides of the network coding layer.

Both classes are synchronous state machines: every method takes the
current simulated time and returns the segments to hand to the layer above
or below. Nothing here schedules anything; hosts read ``deadline`` and call
``on_timer`` when it passes.

Codeword framing
----------------
The ``k'`` information segments of a codeword carry consecutive TCP
sequence numbers ``mu0 .. mu0+k'-1`` and symbol indicator 0. The ``n-k``
redundancy segments reuse the last of those sequence numbers with symbol
indicator ``1 .. n-k``. Normally ``k' == k``. A block is closed early
(``k' < k``) when the flush timer fires, when TCP sends a segment whose
body does not fill a codec segment, or when the sequence numbers jump. The
missing ``k - k'`` information rows are zero on both sides and never sent
(a shortened code). Such codewords carry a 3-byte NC option on every
segment: ``k'`` followed by the body length of the last real segment.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from .errors import BadParams, LengthMismatch, MalformedBody, StaleAck, UnexpectedData
from .headers import (
    RESIDUAL_HEADER_LEN,
    REUSED_FLAGS,
    Flag,
    NcHeader,
    NcSegment,
    TcpSegment,
    restore_header,
    rewrite_mss,
    strip_header,
)
from .mds import CodeParams, ReceivedSet, get_code

log = logging.getLogger(__name__)


def _body_len(seg: TcpSegment) -> int:
    return RESIDUAL_HEADER_LEN + len(seg.options) + len(seg.payload)


def _short_block_option(count: int, last_len: int) -> bytes:
    return bytes([count]) + last_len.to_bytes(2, "big")


def _parse_block_option(header: NcHeader, params: CodeParams) -> tuple[int, int]:
    """``(real information segments, body length of the last one)``."""
    opts = header.nc_options
    if len(opts) < 3:
        return params.k, params.segment_size
    return opts[0], int.from_bytes(opts[1:3], "big")


@dataclass
class OutstandingCodeword:
    segments: list[NcSegment]
    first_seq: int
    last_seq: int
    threshold: int
    src_port: int
    dst_port: int
    sent_at: dict[int, float] = field(default_factory=dict)
    index: dict[int, int] = field(default_factory=dict)  # position -> emission order
    acked: set[int] = field(default_factory=set)
    retries: int = 0
    deadline: float = 0.0
    highest_acked: int = -1
    highest_acked_at: float = 0.0

    @property
    def resolved(self) -> bool:
        return len(self.acked) >= self.threshold


class NcTransmitter:
    """Buffers TCP data, emits codewords and issues speculative ACKs.

    ``spec_threshold`` is the number of distinct NC acknowledgments of a
    codeword after which its segments are acknowledged to TCP. It defaults
    to ``k``.

    A new codeword always goes out once every earlier one has been
    acknowledged to TCP. While one is still outstanding, ``window`` (in
    units of ``n`` segments) bounds what may be in flight: the next
    codeword must fit next to the segments not yet acknowledged (or
    overtaken by a later acknowledgment), including redundancy still
    draining after a speculative ACK. ``window=1`` keeps a single
    outstanding codeword; a little more keeps the bottleneck busy while
    the ACKs of the previous codeword travel back. Data that does not fit
    queues in ``pending``. TCP acknowledgments are cumulative, so a
    codeword that reaches its threshold while an older one still lacks
    acknowledgments waits for it.
    """

    def __init__(
        self,
        params: CodeParams,
        spec_threshold: int | None = None,
        rtt: float = 0.1,
        flush_delay: float = 0.05,
        max_backoff: float = 64.0,
        window: float = 1.0,
        max_codewords: int = 4,
    ):
        s = params.k if spec_threshold is None else spec_threshold
        if not params.k <= s <= params.n:
            raise BadParams(f"speculative ACK threshold {s} outside [k={params.k}, n={params.n}]")
        if params.segment_size <= RESIDUAL_HEADER_LEN:
            raise BadParams("segment_size leaves no room for payload")
        if window < 1 or max_codewords < 1:
            raise BadParams("window must be >= 1 codeword and max_codewords >= 1")
        self.params = params
        self.code = get_code(params)
        self.spec_threshold = s
        self.initial_rtt = rtt
        self.flush_delay = flush_delay
        self.max_backoff = max_backoff
        self.window_segments = window * params.n
        self.max_codewords = max_codewords
        self.codewords_sent = 0
        self.retransmissions = 0
        self.speculative_acks = 0
        self.reset()

    def reset(self):
        """Return to the initial state; configuration and counters survive."""
        self.pending: deque[TcpSegment] = deque()
        self.window: list[OutstandingCodeword] = []
        self.draining: list[OutstandingCodeword] = []
        self._by_position: dict[int, OutstandingCodeword] = {}
        self.next_seq: int | None = None
        self.srtt = self.initial_rtt
        self.timer = 2 * self.srtt
        self.ack_spacing = 0.0
        self.flush_deadline: float | None = None
        self._flush_at: float | None = None
        self._syn_sent_at: float | None = None

    @property
    def outstanding(self) -> OutstandingCodeword | None:
        """Oldest codeword not yet acknowledged to TCP."""
        return self.window[0] if self.window else None

    @property
    def buffer(self) -> list[TcpSegment]:
        """Segments that will form the next codeword."""
        return list(self.pending)[: self.params.k]

    @property
    def ack_count(self) -> int:
        o = self.outstanding
        return len(o.acked) if o else 0

    @property
    def rtx_deadline(self) -> float | None:
        times = [o.deadline for o in self.window if not o.resolved]
        return min(times) if times else None

    @property
    def deadline(self) -> float | None:
        times = [t for t in (self.rtx_deadline, self.flush_deadline) if t is not None]
        return min(times) if times else None

    def is_idle(self) -> bool:
        return not self.window and not self.pending

    # -- from TCP -----------------------------------------------------

    def on_tcp_segment(self, seg: TcpSegment, now: float = 0.0) -> list[NcSegment]:
        if seg.flags & Flag.SYN:
            if seg.mss is not None:
                seg = rewrite_mss(seg, self.params.segment_size)
            self.reset()
            self.next_seq = seg.seq_no + 1
            self._syn_sent_at = now
            return [NcSegment(*strip_header(seg))]
        if seg.flags & (Flag.FIN | Flag.RST):
            out = [NcSegment(*strip_header(seg))]
            self.reset()
            return out
        if seg.is_pure_ack:
            # TCP acknowledgments never cross an NC network
            return []
        if _body_len(seg) > self.params.segment_size:
            raise LengthMismatch(
                f"segment body of {_body_len(seg)} bytes exceeds segment_size "
                f"{self.params.segment_size}; was the MSS rewritten?"
            )
        if self.next_seq is not None and seg.seq_no < self.next_seq:
            return []  # TCP retransmission of data this layer already owns
        if self.next_seq is not None and seg.seq_no > self.next_seq:
            log.warning("sequence jump %d -> %d, closing block", self.next_seq, seg.seq_no)
        self.next_seq = seg.seq_no + 1
        self.pending.append(seg)
        return self.poll(now)

    def _next_block(self) -> tuple[int, bool]:
        """Size of the block at the head of ``pending`` and whether it is closed."""
        k, size = self.params.k, self.params.segment_size
        count = 0
        prev = None
        for seg in self.pending:
            if prev is not None and seg.seq_no != prev + 1:
                return count, True
            count += 1
            prev = seg.seq_no
            if count == k or _body_len(seg) != size:
                return count, True
        return count, False

    def in_flight(self, now: float = 0.0) -> int:
        """Segments sent but neither acknowledged nor overtaken by an ACK."""
        keep = []
        for o in self.draining:
            if o.highest_acked < len(o.segments) - 1 and now < o.deadline:
                keep.append(o)
            else:
                for pos in o.sent_at:
                    del self._by_position[pos]
        self.draining = keep
        return sum(len(o.segments) - 1 - o.highest_acked for o in self.window + self.draining)

    def _has_room(self, now: float) -> bool:
        if not self.window:
            return True
        if len(self.window) >= self.max_codewords:
            return False
        return self.in_flight(now) + self.params.n <= self.window_segments

    def poll(self, now: float = 0.0) -> list[NcSegment]:
        """Emit every codeword that is ready and fits in the window."""
        out: list[NcSegment] = []
        blocked = False
        while self.pending:
            if not self._has_room(now):
                blocked = True
                break
            count, closed = self._next_block()
            if not closed:
                if self._flush_at is None:
                    self._flush_at = now + self.flush_delay
                if now < self._flush_at:
                    break
            block = [self.pending.popleft() for _ in range(count)]
            self._flush_at = None
            out += self._emit(block, now)
        # when to look again without an ACK: once a partial block is due, or
        # once draining redundancy stops counting against the window
        if not self.pending:
            self.flush_deadline = None
        elif blocked:
            self.in_flight(now)  # drop expired drains so the wake-up lies ahead
            self.flush_deadline = min((o.deadline for o in self.draining), default=None)
        else:
            self.flush_deadline = self._flush_at
        return out

    def flush(self, now: float = 0.0) -> list[NcSegment]:
        """Encode whatever is buffered right away, padding a short block."""
        if not self._has_room(now) or not self.pending:
            return []
        count, _ = self._next_block()
        block = [self.pending.popleft() for _ in range(count)]
        self._flush_at = None
        out = self._emit(block, now)
        return out + self.poll(now)

    def _emit(self, block: list[TcpSegment], now: float) -> list[NcSegment]:
        p = self.params
        real = len(block)
        headers, bodies = zip(*(strip_header(s) for s in block))
        last_len = len(bodies[-1])
        options = b""
        if real < p.k or last_len != p.segment_size:
            options = _short_block_option(real, last_len)
        padded = [b.ljust(p.segment_size, b"\0") for b in bodies]
        padded += [bytes(p.segment_size)] * (p.k - real)
        codeword = self.code.encode(padded)

        first, last = block[0], block[-1]
        out = [
            NcSegment(
                NcHeader(h.src_port, h.dst_port, h.seq_no, 0, h.flags, options), body
            )
            for h, body in zip(headers, bodies)
        ]
        for r in range(1, p.n - p.k + 1):
            header = NcHeader(last.src_port, last.dst_port, last.seq_no, r, Flag.NONE, options)
            out.append(NcSegment(header, codeword.segments[p.k + r - 1]))

        # segments still in flight ahead of this codeword delay its ACKs
        ahead = sum(len(o.segments) - 1 - o.highest_acked for o in self.window if not o.resolved)
        o = OutstandingCodeword(
            segments=out,
            first_seq=first.seq_no,
            last_seq=last.seq_no,
            threshold=self.spec_threshold - (p.k - real),
            src_port=first.src_port,
            dst_port=first.dst_port,
            sent_at={seg.header.position: now for seg in out},
            index={seg.header.position: i for i, seg in enumerate(out)},
            deadline=now + self.timer + ahead * self.ack_spacing,
        )
        self.window.append(o)
        for pos in o.sent_at:
            self._by_position[pos] = o
        self.codewords_sent += 1
        return list(out)

    # -- from IP ------------------------------------------------------

    def on_nc_ack(self, ack: NcSegment, now: float = 0.0) -> TcpSegment | None:
        """Count an NC acknowledgment; return the speculative TCP ACK when due."""
        if not ack.is_ack or ack.body:
            raise MalformedBody("NC acknowledgments carry the ACK flag and no body")
        pos = ack.header.position
        o = self._by_position.get(pos)
        if o is None:
            raise StaleAck(f"no outstanding codeword contains position {pos}")
        i = o.index[pos]
        if o.resolved:
            # already acknowledged to TCP; only the in-flight estimate cares
            if i > o.highest_acked:
                o.highest_acked, o.highest_acked_at = i, now
            raise StaleAck(f"codeword holding position {pos} is already acknowledged")
        if pos in o.acked:
            return None
        o.acked.add(pos)
        if o.retries == 0:
            self.srtt += (now - o.sent_at[pos] - self.srtt) / 8
            if o.highest_acked >= 0 and i > o.highest_acked:
                gap = (now - o.highest_acked_at) / (i - o.highest_acked)
                self.ack_spacing += (gap - self.ack_spacing) / 8
        if i > o.highest_acked:
            o.highest_acked, o.highest_acked_at = i, now
        o.deadline = self._expected_completion(o)
        if len(o.acked) != o.threshold:
            return None
        if o.retries == 0:
            self.timer = 2 * self.srtt

        acked_up_to = None
        while self.window and self.window[0].resolved:
            done = self.window.pop(0)
            self.draining.append(done)
            acked_up_to = done.last_seq + 1
            self.speculative_acks += 1
        if acked_up_to is None:
            return None
        return TcpSegment(
            src_port=o.dst_port,
            dst_port=o.src_port,
            seq_no=0,
            ack_no=acked_up_to,
            flags=Flag.ACK,
        )

    def on_ip_segment(
        self, seg: NcSegment, now: float = 0.0
    ) -> tuple[list[TcpSegment], list[NcSegment]]:
        """Handle a segment from the network: ``(to_tcp, to_ip)``."""
        if seg.is_ack and not seg.is_control:
            try:
                tcp_ack = self.on_nc_ack(seg, now)
            except StaleAck as exc:
                log.debug("ignoring stale NC ack: %s", exc)
                return [], self.poll(now)
            return ([tcp_ack] if tcp_ack else []), self.poll(now)
        tcp = restore_header(seg.header, seg.body)
        if seg.header.flags & Flag.SYN and self._syn_sent_at is not None:
            self.srtt = max(now - self._syn_sent_at, 1e-6)
            self.timer = 2 * self.srtt
            self._syn_sent_at = None
        if seg.header.flags & (Flag.FIN | Flag.RST):
            self.reset()
        return [tcp], []

    # -- timers -------------------------------------------------------

    def _expected_completion(self, o: OutstandingCodeword) -> float:
        """When the last segment of ``o`` should have been acknowledged.

        Segments leave in emission order over a FIFO path, so ACKs come back
        spaced by the bottleneck serialization time. Extrapolating from the
        latest ACK by that spacing, plus a guard that grows with the backoff,
        gives the point after which no further ACK can be expected.
        """
        remaining = len(o.segments) - 1 - o.highest_acked
        guard = 4 * self.ack_spacing + self.timer / 8
        return o.highest_acked_at + remaining * self.ack_spacing + guard

    def on_timeout(self, now: float = 0.0) -> list[NcSegment]:
        """Re-send every expired codeword and back the timer off.

        Called directly, it expires at least the oldest unresolved codeword.
        """
        live = [o for o in self.window if not o.resolved]
        if not live:
            return []
        expired = [o for o in live if o.deadline <= now] or live[:1]
        self.timer = min(2 * self.timer, self.max_backoff * self.srtt)
        out: list[NcSegment] = []
        for o in expired:
            o.retries += 1
            o.highest_acked, o.highest_acked_at = -1, now
            for pos in o.sent_at:
                o.sent_at[pos] = now
            o.deadline = now + self.timer + len(out) * self.ack_spacing
            self.retransmissions += 1
            out += o.segments
        return out

    def on_timer(self, now: float) -> list[NcSegment]:
        out = []
        rtx = self.rtx_deadline
        if rtx is not None and now >= rtx:
            out += self.on_timeout(now)
        if self.flush_deadline is not None and now >= self.flush_deadline:
            out += self.poll(now)
        return out


class NcReceiver:
    """Collects coded segments, acknowledges each one and decodes codewords.

    Segments of codewords that are already delivered are acknowledged and
    dropped. Segments up to ``reorder_codewords`` codewords ahead are kept
    until their codeword becomes current.
    """

    def __init__(self, params: CodeParams, reorder_codewords: int = 4):
        self.params = params
        self.code = get_code(params)
        self.reorder_codewords = reorder_codewords
        self.acks_sent = 0
        self.codewords_decoded = 0
        self.segments_reconstructed = 0
        self.reset()

    def reset(self):
        self.base: int | None = None
        self.pending: dict[tuple[int, int], NcSegment] = {}
        self.delivered_up_to: int | None = None

    @property
    def expected_base(self) -> int | None:
        return self.base

    @property
    def buffer(self) -> ReceivedSet:
        """Entries collected so far for the current codeword."""
        group = self._current_groups()
        if not group:
            return ReceivedSet(self.params, {})
        real, segs = max(group.items(), key=lambda kv: len(kv[1]))
        return ReceivedSet(self.params, {
            self._codeword_index(s.header): s.body.ljust(self.params.segment_size, b"\0")
            for s in segs
        })

    def _codeword_index(self, h: NcHeader) -> int:
        if h.symbol_indicator == 0:
            return h.seq_no - self.base
        return self.params.k + h.symbol_indicator - 1

    def on_ip_segment(
        self, seg: NcSegment, now: float = 0.0
    ) -> tuple[list[TcpSegment], NcSegment | None]:
        h = seg.header
        if seg.is_ack and not seg.is_control:
            return [], None
        if seg.is_control:
            tcp = restore_header(h, seg.body)
            self.reset()
            if h.flags & Flag.SYN:
                self.base = h.seq_no + 1
            return [tcp], None

        ack = NcSegment(NcHeader(h.dst_port, h.src_port, h.seq_no, h.symbol_indicator, Flag.ACK))
        self.acks_sent += 1
        real, _ = _parse_block_option(h, self.params)
        if not 1 <= real <= self.params.k or h.symbol_indicator > self.params.n - self.params.k:
            log.warning("dropping segment with inconsistent framing: %s", h)
            return [], ack
        if self.base is None:
            self.base = h.seq_no if h.symbol_indicator == 0 else h.seq_no - real + 1
        if h.seq_no < self.base:
            return [], ack
        if h.seq_no >= self.base + self.reorder_codewords * self.params.k:
            log.warning("segment %d too far ahead of %d, dropped", h.seq_no, self.base)
            return [], ack
        self.pending.setdefault((h.seq_no, h.symbol_indicator), seg)
        return self._drain(), ack

    def _current_groups(self) -> dict[int, list[NcSegment]]:
        """Pending segments that can belong to the current codeword, by ``k'``.

        A segment claims the codeword ``[base, base + k' - 1]`` using its own
        ``k'``. Segments of later codewords can land in a wrong group but
        never reach that group's threshold, since their sequence numbers
        start after ``base`` and their redundancy sits past the group's end.
        """
        groups: dict[int, list[NcSegment]] = {}
        for (mu, nu), seg in self.pending.items():
            real, _ = _parse_block_option(seg.header, self.params)
            end = self.base + real - 1
            if mu > end or (nu and mu != end):
                continue
            groups.setdefault(real, []).append(seg)
        return groups

    def _drain(self) -> list[TcpSegment]:
        delivered = []
        while True:
            ready = [(r, segs) for r, segs in self._current_groups().items() if len(segs) >= r]
            if not ready:
                return delivered
            delivered += self._decode(*ready[0])

    def _decode(self, real: int, segs: list[NcSegment]) -> list[TcpSegment]:
        p = self.params
        size = p.segment_size
        entries: dict[int, bytes] = {}
        exact: dict[int, bytes] = {}
        for seg in segs:
            idx = self._codeword_index(seg.header)
            if seg.header.symbol_indicator == 0:
                exact[idx] = seg.body
                entries[idx] = seg.body.ljust(size, b"\0")
            elif len(seg.body) == size:
                entries[idx] = seg.body
        for i in range(real, p.k):
            entries[i] = bytes(size)
        block = self.code.decode(ReceivedSet(p, entries))

        template = segs[0].header
        _, last_len = _parse_block_option(template, p)
        out = []
        for i in range(real):
            body = exact.get(i)
            if body is None:
                body = block.segments[i][: last_len if i == real - 1 else size]
                self.segments_reconstructed += 1
            header = NcHeader(template.src_port, template.dst_port, self.base + i)
            out.append(restore_header(header, body))

        self.delivered_up_to = self.base + real - 1
        self.base += real
        self.pending = {key: s for key, s in self.pending.items() if key[0] >= self.base}
        self.codewords_decoded += 1
        return out

    def on_tcp_segment(self, seg: TcpSegment, now: float = 0.0) -> list[NcSegment]:
        """Handle output of the receiver-side TCP."""
        if seg.flags & Flag.SYN:
            if seg.mss is not None:
                seg = rewrite_mss(seg, self.params.segment_size)
            return [NcSegment(*strip_header(seg))]
        if seg.flags & (Flag.FIN | Flag.RST):
            out = [NcSegment(*strip_header(seg))]
            self.reset()
            return out
        discard_tcp_ack(seg)
        return []


def discard_tcp_ack(seg: TcpSegment) -> None:
    """Drop a receiver-side TCP acknowledgment.

    Under the half-duplex assumption the receiver never sends payload, so
    data here is an error rather than something to forward.
    """
    if seg.payload:
        raise UnexpectedData(f"receiver-side TCP sent {len(seg.payload)} payload bytes")
    if seg.flags & REUSED_FLAGS:
        raise ValueError("connection management segments are not TCP acknowledgments")
