import random

import pytest
from hypothesis import given, settings, strategies as st

from nclayer.errors import HandshakeTimeout
from nclayer.headers import Flag, TcpSegment
from nclayer.mds import CodeParams
from nclayer.nc import NcReceiver, NcTransmitter
from nclayer.tcp import ConnState, Phase, TcpSender, TcpSink, bulk_payload, handshake

MSS = 1460


def established(**kw) -> TcpSender:
    s = TcpSender(**kw)
    sink = TcpSink()
    handshake(s, sink)
    return s


def ack(n):
    return TcpSegment(21, 5000, 1, ack_no=n, flags=Flag.ACK)


def test_window_limits_emission():
    s = established()
    s.cwnd = 2.0
    out = s.write(b"x" * (10 * MSS))
    assert [seg.seq_no for seg in out] == [1, 2]
    assert all(len(seg.payload) == MSS for seg in out)


def test_nothing_queued_nothing_sent():
    s = established()
    assert s.write(b"") == []
    assert s.close() == [s._fin()]  # only the FIN, since nothing is in flight


def test_sliding_window():
    s = established()
    s.cwnd, s.ssthresh = 2.0, 1.0
    s.write(b"x" * (10 * MSS))
    out = s.on_ack(2)
    assert [seg.seq_no for seg in out] == [3]


def test_slow_start_growth():
    s = established()
    s.cwnd = 4.0
    s.write(b"x" * (10 * MSS))
    s.on_ack(2)
    assert s.cwnd == 5.0
    assert s.phase is Phase.SLOW_START


def test_congestion_avoidance_growth():
    s = established()
    s.cwnd, s.ssthresh = 4.0, 2.0
    s.write(b"x" * (10 * MSS))
    s.on_ack(2)
    assert s.cwnd == pytest.approx(4.25)
    assert s.phase is Phase.CONGESTION_AVOIDANCE


def test_cumulative_ack_counts_every_segment():
    s = established()
    s.cwnd = 4.0
    s.write(b"x" * (10 * MSS))
    s.on_ack(5)  # four segments at once, as a speculative NC ACK would
    assert s.cwnd == 8.0


def test_fast_retransmit_on_third_duplicate():
    s = established()
    s.cwnd = 8.0
    s.write(b"x" * (10 * MSS))
    s.on_ack(2)
    assert s.on_ack(2) == []
    assert s.on_ack(2) == []
    out = s.on_ack(2)
    assert [seg.seq_no for seg in out] == [2]
    assert s.fast_retransmits == 1 and s.cwnd == s.ssthresh


def test_timeout_multiplicative_decrease():
    s = established()
    s.cwnd = 8.0
    s.write(b"x" * (10 * MSS))
    out = s.on_timeout(5.0)
    assert [seg.seq_no for seg in out] == [1]
    assert s.cwnd == 1.0 and s.ssthresh == 4.0
    assert s.phase is Phase.SLOW_START


def test_timeout_backoff():
    s = established()
    s.write(b"x" * MSS)
    rto = s.rto
    s.on_timeout(1.0)
    assert s.rto == pytest.approx(2 * rto)
    s.on_timeout(2.0)
    assert s.rto == pytest.approx(4 * rto)
    for i in range(20):
        s.on_timeout(3.0 + i)
    assert s.rto == s.max_rto


def test_timeout_with_nothing_outstanding():
    s = established()
    cwnd, rto = s.cwnd, s.rto
    assert s.on_timeout(1.0) == []
    assert (s.cwnd, s.rto, s.timeouts) == (cwnd, rto, 0)


def test_go_back_n_after_timeout():
    s = established()
    s.cwnd = 4.0
    s.write(b"x" * (10 * MSS))
    s.on_timeout(1.0)
    out = s.on_ack(2, now=1.1)
    assert [seg.seq_no for seg in out] == [2, 3]
    assert s.retransmissions == 3


def test_handshake_plain():
    s, sink = TcpSender(), TcpSink()
    assert handshake(s, sink) == 1460
    assert s.state is ConnState.ESTABLISHED


def test_handshake_through_nc_layer():
    params = CodeParams(16, 8, segment_size=1460)
    tx, rx = NcTransmitter(params), NcReceiver(params)

    def forward(seg):
        return [r for nc in tx.on_tcp_segment(seg) for r in rx.on_ip_segment(nc)[0]]

    def backward(seg):
        return [t for nc in rx.on_tcp_segment(seg) for t in tx.on_ip_segment(nc)[0]]

    s, sink = TcpSender(), TcpSink()
    assert handshake(s, sink, forward, backward) == 1448
    assert sink.mss == 1448


def test_handshake_gives_up():
    s = TcpSender()
    with pytest.raises(HandshakeTimeout):
        handshake(s, TcpSink(), forward=lambda seg: [])
    assert s._syn_retries == 5


def test_handshake_survives_a_lost_syn():
    lost = iter([True, False])
    s = TcpSender()
    handshake(s, TcpSink(), forward=lambda seg: [] if next(lost, False) else [seg])
    assert s.state is ConnState.ESTABLISHED
    assert s.rto >= 3.0


def test_sink_reorders_and_counts_duplicates():
    sink = TcpSink()
    sink.on_segment(TcpSegment(5000, 21, 0, flags=Flag.SYN))
    seg = lambda n: TcpSegment(5000, 21, n, payload=bytes([n]))
    assert sink.on_segment(seg(2))[0].ack_no == 1
    assert sink.on_segment(seg(1))[0].ack_no == 3
    sink.on_segment(seg(1))
    assert bytes(sink.data) == b"\x01\x02"
    assert sink.duplicates == 1


def test_bulk_payload_is_deterministic():
    assert bulk_payload(7, 10) == bulk_payload(7, 10)
    assert len(bulk_payload(7, 1460)) == 1460
    s = established(bulk=True)
    s.cwnd = 3.0
    s._send_new(0.0)
    assert s.in_flight == 3


def lossy_transfer(data: bytes, per: float, seed: int, mss: int = 100):
    """Drive sender and sink over a lossy channel with zero delay.

    Time only moves when everything in flight is lost, jumping to the
    sender's retransmission deadline.
    """
    rng = random.Random(seed)
    s, sink = TcpSender(mss=mss), TcpSink(mss=mss)
    handshake(s, sink)
    now = 0.0
    wire = s.write(data, now) + s.close(now)
    checks = 0
    while not s.finished:
        if not wire:
            now = s.deadline
            wire = s.on_timeout(now)
        replies = []
        for seg in wire:
            if rng.random() >= per:
                replies += sink.on_segment(seg, now)
        wire = []
        for r in replies:
            if rng.random() >= per:
                before = s.in_flight
                wire += s.on_segment(r, now)
                # new data never pushes the flight beyond the window
                assert s.in_flight <= max(int(s.cwnd), before)
                checks += 1
    return sink, checks


@pytest.mark.parametrize("per", [0.0, 0.1, 0.3, 0.5])
def test_reliable_delivery(per):
    data = random.Random(int(per * 100)).randbytes(10_000 * 100)
    sink, checks = lossy_transfer(data, per, seed=1)
    assert bytes(sink.data) == data
    assert sink.delivered_segments == 10_000
    assert checks > 0


@settings(max_examples=20)
@given(st.binary(min_size=0, max_size=3000), st.floats(0.0, 0.6), st.integers(0, 1000))
def test_reliable_delivery_property(data, per, seed):
    sink, _ = lossy_transfer(data, per, seed, mss=64)
    assert bytes(sink.data) == data


def test_additive_increase_one_segment_per_rtt():
    s = established(rwnd=1 << 30)
    s.cwnd, s.ssthresh = 10.0, 10.0
    s.write(b"x" * (MSS * 5000))
    start = s.cwnd
    for rtt in range(50):
        window = s.in_flight
        base = s.send_base
        for i in range(1, window + 1):
            s.on_ack(base + i, now=rtt + i * 1e-3)
    assert s.cwnd - start == pytest.approx(50, rel=0.1)
