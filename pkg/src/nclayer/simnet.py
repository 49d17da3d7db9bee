"""Deterministic discrete-event network simulation.

The event loop orders events by ``(time, seq)`` where ``seq`` is a global
scheduling counter, so equal-time events run in the order they were
scheduled. Links are FIFO drop-tail queues; erasures are decided by one
uniform draw per packet from a generator keyed on ``(seed, link, flow)``,
so adding a flow never shifts another flow's draws.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
import zlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import HandshakeTimeout, PastEvent
from .headers import TcpSegment
from .nc import NcReceiver, NcTransmitter
from .scenario import ScenarioConfig
from .tcp import TcpSender, TcpSink

log = logging.getLogger(__name__)


class EventKind(enum.Enum):
    PACKET_ARRIVAL = "packet_arrival"
    TIMER_EXPIRY = "timer_expiry"
    APP_SEND = "app_send"


@dataclass(order=True, frozen=True)
class Event:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    target: Any = field(compare=False)
    payload: Any = field(compare=False, default=None)


class Simulator:
    """Event queue plus simulated clock. Targets implement ``handle(sim, event)``."""

    def __init__(self):
        self.now = 0.0
        self._heap: list[Event] = []
        self._counter = itertools.count()
        self.events_processed = 0

    def schedule(self, time: float, kind: EventKind, target, payload=None) -> Event:
        if time < self.now:
            raise PastEvent(f"event at t={time} scheduled at t={self.now}")
        event = Event(time, next(self._counter), kind, target, payload)
        heapq.heappush(self._heap, event)
        return event

    def __len__(self):
        return len(self._heap)

    def run_until(self, t_end: float) -> int:
        """Process every event with ``time <= t_end``; returns how many ran."""
        if t_end < self.now:
            raise PastEvent(f"cannot run back to t={t_end} from t={self.now}")
        heap = self._heap
        count = 0
        while heap and heap[0].time <= t_end:
            event = heapq.heappop(heap)
            self.now = event.time
            event.target.handle(self, event)
            count += 1
        self.now = t_end
        self.events_processed += count
        return count


class _Uniforms:
    """Buffered uniform draws from one PCG64 stream."""

    def __init__(self, seed: int, *key: int, chunk: int = 4096):
        seq = np.random.SeedSequence(seed, spawn_key=key)
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self._chunk = chunk
        self._buf: list[float] = []
        self._i = 0

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf = self._gen.random(self._chunk).tolist()
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x


@dataclass(eq=False)
class Packet:
    flow: int
    src: str
    dst: str
    size: int  # bytes
    segment: Any
    sent_at: float = 0.0


class Link:
    """Unidirectional link: drop-tail FIFO, serialization, propagation, erasure."""

    def __init__(
        self,
        name: str,
        dst: "Node",
        rate: float,
        delay: float,
        queue_capacity: int = 50,
        per: float = 0.0,
        seed: int = 0,
    ):
        if not 0.0 <= per <= 1.0:
            raise ValueError(f"erasure probability {per} outside [0, 1]")
        self.name = name
        self.dst = dst
        self.rate = rate
        self.delay = delay
        self.queue_capacity = queue_capacity
        self.per = per
        self.seed = seed
        self._busy_until = 0.0
        self._waiting: list[float] = []  # service start times still in the future
        self._streams: dict[int, _Uniforms] = {}
        self._key = zlib.crc32(name.encode())
        self.injected = 0
        self.delivered = 0
        self.erased = 0
        self.dropped = 0
        self.in_flight = 0

    def __repr__(self):
        return f"Link({self.name!r}, rate={self.rate}, delay={self.delay}, per={self.per})"

    def _draw(self, flow: int) -> float:
        stream = self._streams.get(flow)
        if stream is None:
            stream = self._streams[flow] = _Uniforms(self.seed, self._key, flow)
        return stream()

    def queue_length(self, now: float) -> int:
        w = self._waiting
        i = 0
        while i < len(w) and w[i] <= now:
            i += 1
        if i:
            del w[:i]
        return len(w)

    def transmit(self, sim: Simulator, packet: Packet) -> bool:
        """Enqueue ``packet``; returns False if the queue was full."""
        now = sim.now
        self.injected += 1
        if self.queue_length(now) >= self.queue_capacity:
            self.dropped += 1
            return False
        start = max(now, self._busy_until)
        if start > now:
            self._waiting.append(start)
        self._busy_until = start + packet.size * 8 / self.rate
        if self.per > 0.0 and self._draw(packet.flow) < self.per:
            self.erased += 1
            return True
        self.in_flight += 1
        sim.schedule(self._busy_until + self.delay, EventKind.PACKET_ARRIVAL, self, packet)
        return True

    def handle(self, sim: Simulator, event: Event):
        self.in_flight -= 1
        self.delivered += 1
        self.dst.receive(sim, event.payload)


class Node:
    def __init__(self, name: str):
        self.name = name
        self.routes: dict[str, Link] = {}
        self.agents: dict[int, Any] = {}

    def __repr__(self):
        return f"Node({self.name!r})"

    def send(self, sim: Simulator, packet: Packet) -> bool:
        return self.routes[packet.dst].transmit(sim, packet)

    def receive(self, sim: Simulator, packet: Packet):
        if packet.dst == self.name:
            self.agents[packet.flow].receive(sim, packet)
        else:
            self.send(sim, packet)


SOURCES = ("A1", "A2")
SINKS = ("S1", "S2")


def dumbbell(cfg: ScenarioConfig) -> tuple[dict[str, Node], dict[str, Link]]:
    """Two sources and two sinks around the bottleneck N3 -> N4.

    Erasures apply on the bottleneck in both directions; the reverse
    direction uses ``cfg.reverse_per``.
    """
    nodes = {name: Node(name) for name in SOURCES + ("N3", "N4") + SINKS}
    links: dict[str, Link] = {}

    def connect(a: str, b: str, rate: float, delay: float, per: float = 0.0):
        link = Link(f"{a}->{b}", nodes[b], rate, delay, cfg.queue_capacity, per, cfg.seed)
        links[link.name] = link
        return link

    fwd = connect("N3", "N4", cfg.bottleneck_rate, cfg.bottleneck_delay, cfg.per)
    rev = connect("N4", "N3", cfg.bottleneck_rate, cfg.bottleneck_delay, cfg.reverse_per)
    for src in SOURCES:
        up = connect(src, "N3", cfg.access_rate, cfg.access_delay)
        down = connect("N3", src, cfg.access_rate, cfg.access_delay)
        for dst in SINKS:
            nodes[src].routes[dst] = up
            nodes["N3"].routes[dst] = fwd
        nodes["N4"].routes[src] = rev
        nodes["N3"].routes[src] = down
    for dst in SINKS:
        down = connect("N4", dst, cfg.access_rate, cfg.access_delay)
        up = connect(dst, "N4", cfg.access_rate, cfg.access_delay)
        nodes["N4"].routes[dst] = down
        for src in SOURCES:
            nodes[dst].routes[src] = up
    return nodes, links


class _Host:
    """Timer plumbing shared by source and sink hosts.

    At most one timer event is pending per host. If a component's deadline
    moves later the pending event is kept and re-checked when it fires.
    """

    def __init__(self, node: Node, peer: str, flow: int):
        self.node = node
        self.peer = peer
        self.flow = flow
        self._armed: float | None = None
        node.agents[flow] = self

    def deadline(self) -> float | None:
        return None

    def on_timer(self, sim: Simulator):
        pass

    def _sync_timer(self, sim: Simulator):
        d = self.deadline()
        if d is None:
            return
        if self._armed is None or d < self._armed:
            self._armed = d
            sim.schedule(max(d, sim.now), EventKind.TIMER_EXPIRY, self, d)

    def _emit(self, sim: Simulator, segments):
        for seg in segments:
            packet = Packet(self.flow, self.node.name, self.peer, seg.wire_size, seg, sim.now)
            self.node.send(sim, packet)

    def handle(self, sim: Simulator, event: Event):
        if event.kind is EventKind.TIMER_EXPIRY:
            if event.payload != self._armed:
                return  # superseded by an earlier timer
            self._armed = None
            d = self.deadline()
            if d is not None and d <= sim.now:
                self.on_timer(sim)
                d = self.deadline()
                if d is not None and d <= sim.now:
                    raise RuntimeError(f"{self!r}: timer handler left deadline {d} in the past")
            self._sync_timer(sim)
        elif event.kind is EventKind.APP_SEND:
            self.start(sim)
            self._sync_timer(sim)

    def start(self, sim: Simulator):
        pass


class SourceHost(_Host):
    """Bulk TCP sender, optionally above an NC transmitter."""

    def __init__(
        self, node, peer, flow, tcp: TcpSender, nc: NcTransmitter | None = None,
        data: bytes | None = None,
    ):
        super().__init__(node, peer, flow)
        self.tcp = tcp
        self.nc = nc
        self.data = data
        self.failed = False

    def deadline(self):
        times = [t for t in (self.tcp.deadline, self.nc.deadline if self.nc else None) if t is not None]
        return min(times) if times else None

    def _down(self, sim: Simulator, segments: list[TcpSegment]):
        if self.nc is None:
            self._emit(sim, segments)
            return
        for seg in segments:
            self._emit(sim, self.nc.on_tcp_segment(seg, sim.now))

    def start(self, sim: Simulator):
        self._down(sim, self.tcp.connect(sim.now))
        if self.data is not None:
            self.tcp.write(self.data, sim.now)
            self.tcp.close(sim.now)

    def receive(self, sim: Simulator, packet: Packet):
        now = sim.now
        if self.nc is None:
            self._down(sim, self.tcp.on_segment(packet.segment, now))
        else:
            to_tcp, to_ip = self.nc.on_ip_segment(packet.segment, now)
            self._emit(sim, to_ip)
            for seg in to_tcp:
                self._down(sim, self.tcp.on_segment(seg, now))
        self._sync_timer(sim)

    def on_timer(self, sim: Simulator):
        now = sim.now
        if self.tcp.deadline is not None and self.tcp.deadline <= now:
            try:
                self._down(sim, self.tcp.on_timeout(now))
            except HandshakeTimeout:
                log.warning("flow %d: handshake timed out", self.flow)
                self.failed = True
        if self.nc is not None and self.nc.deadline is not None and self.nc.deadline <= now:
            self._emit(sim, self.nc.on_timer(now))


class SinkHost(_Host):
    """TCP sink, optionally below an NC receiver; records deliveries."""

    def __init__(self, node, peer, flow, tcp: TcpSink, nc: NcReceiver | None, bins: list[int]):
        super().__init__(node, peer, flow)
        self.tcp = tcp
        self.nc = nc
        self.bins = bins
        self.delivered_bytes = 0
        tcp.on_deliver = self._delivered

    def _delivered(self, seq: int, payload: bytes, now: float):
        self.delivered_bytes += len(payload)
        i = int(now)
        if i < len(self.bins):
            self.bins[i] += 1

    def receive(self, sim: Simulator, packet: Packet):
        now = sim.now
        if self.nc is None:
            self._emit(sim, self.tcp.on_segment(packet.segment, now))
            return
        delivered, ack = self.nc.on_ip_segment(packet.segment, now)
        if ack is not None:
            self._emit(sim, [ack])
        for seg in delivered:
            for reply in self.tcp.on_segment(seg, now):
                self._emit(sim, self.nc.on_tcp_segment(reply, now))


@dataclass
class FlowMetrics:
    source: str
    sink: str
    nc_enabled: bool
    start_time: float
    throughput: list[int]  # segments delivered to the sink TCP per 1 s bin
    delivered_segments: int
    delivered_bytes: int
    duplicates: int
    tcp_retransmissions: int
    tcp_timeouts: int
    nc_codewords: int = 0
    nc_retransmissions: int = 0
    nc_reconstructed: int = 0
    failed: bool = False

    def mean_throughput(self, t_from: float = 0.0, t_to: float | None = None) -> float:
        lo = int(t_from)
        hi = len(self.throughput) if t_to is None else int(t_to)
        window = self.throughput[lo:hi]
        return sum(window) / len(window) if window else 0.0

    @property
    def goodput(self) -> float:
        """Bytes per second over the whole run."""
        return self.delivered_bytes / len(self.throughput) if self.throughput else 0.0


@dataclass
class LinkMetrics:
    injected: int
    delivered: int
    erased: int
    dropped: int
    in_flight: int


@dataclass
class Metrics:
    duration: float
    seed: int
    config_digest: str
    flows: list[FlowMetrics]
    links: dict[str, LinkMetrics]


def transfer_data(cfg: ScenarioConfig, flow: int) -> bytes:
    """The bytes a finite-transfer flow sends, reproducible from the seed."""
    rng = np.random.Generator(np.random.PCG64([cfg.seed, 0x5EED, flow]))
    return rng.bytes(cfg.transfer_bytes)


class Network:
    """A dumbbell scenario ready to run."""

    def __init__(self, cfg: ScenarioConfig, keep_data: bool = False):
        self.cfg = cfg
        self.sim = Simulator()
        self.nodes, self.links = dumbbell(cfg)
        self.sources: list[SourceHost] = []
        self.sinks: list[SinkHost] = []
        n_bins = int(cfg.t_end)
        for flow, spec in enumerate(cfg.flows):
            params = cfg.code_params()
            data = transfer_data(cfg, flow) if cfg.transfer_bytes else None
            tcp = TcpSender(
                5000 + flow, 21, mss=cfg.mss, max_syn_retries=cfg.syn_retries,
                bulk=data is None,
            )
            nc_tx = nc_rx = None
            if spec.nc_enabled:
                nc_tx = NcTransmitter(
                    params, cfg.spec_threshold, flush_delay=cfg.flush_delay,
                    window=cfg.codeword_window,
                )
                nc_rx = NcReceiver(params)
            src = SourceHost(self.nodes[spec.source], spec.sink, flow, tcp, nc_tx, data)
            sink = TcpSink(21, 5000 + flow, mss=cfg.mss, keep_data=keep_data)
            dst = SinkHost(self.nodes[spec.sink], spec.source, flow, sink, nc_rx, [0] * n_bins)
            self.sources.append(src)
            self.sinks.append(dst)
            self.sim.schedule(spec.start_time, EventKind.APP_SEND, src)

    def run_until(self, t_end: float | None = None) -> Metrics:
        t_end = self.cfg.t_end if t_end is None else t_end
        self.sim.run_until(t_end)
        return self.metrics()

    def metrics(self) -> Metrics:
        flows = []
        for spec, src, dst in zip(self.cfg.flows, self.sources, self.sinks):
            fm = FlowMetrics(
                source=spec.source,
                sink=spec.sink,
                nc_enabled=spec.nc_enabled,
                start_time=spec.start_time,
                throughput=list(dst.bins),
                delivered_segments=dst.tcp.delivered_segments,
                delivered_bytes=dst.delivered_bytes,
                duplicates=dst.tcp.duplicates,
                tcp_retransmissions=src.tcp.retransmissions,
                tcp_timeouts=src.tcp.timeouts,
                failed=src.failed,
            )
            if src.nc is not None:
                fm.nc_codewords = src.nc.codewords_sent
                fm.nc_retransmissions = src.nc.retransmissions
                fm.nc_reconstructed = dst.nc.segments_reconstructed
            flows.append(fm)
        links = {
            name: LinkMetrics(l.injected, l.delivered, l.erased, l.dropped, l.in_flight)
            for name, l in self.links.items()
        }
        return Metrics(self.sim.now, self.cfg.seed, self.cfg.digest(), flows, links)


def run_scenario(cfg: ScenarioConfig) -> Metrics:
    return Network(cfg).run_until(cfg.t_end)
