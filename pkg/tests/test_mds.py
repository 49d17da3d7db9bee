import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nclayer.errors import BadParams, InsufficientSegments, LengthMismatch, TooLarge
from nclayer.galois import get_field
from nclayer.mds import (
    CodeParams,
    Codeword,
    ReceivedSet,
    SegmentBlock,
    decode,
    encode,
    get_code,
    hamming_distance,
    verify_mds,
)

from oracles import all_info_vectors, brute_min_distance, lagrange_eval, poly_mul


def random_block(rng, params):
    return SegmentBlock(params, tuple(rng.bytes(params.segment_size) for _ in range(params.k)))


def test_rate_one_is_identity():
    p = CodeParams(4, 4, segment_size=3)
    info = SegmentBlock(p, (b"abc", b"def", b"ghi", b"jkl"))
    assert encode(info).segments == info.segments


@pytest.mark.parametrize("n,k", [(3, 2), (16, 8), (12, 1)])
def test_zero_block_encodes_to_zero(n, k):
    p = CodeParams(n, k, segment_size=5)
    cw = encode(SegmentBlock(p, (bytes(5),) * k))
    assert cw.segments == (bytes(5),) * n


def test_small_code_against_lagrange_oracle():
    # the line through (1, 1) and (2, 2) is f(x) = x, so the parity at x = 4 is 4
    p = CodeParams(3, 2)
    assert encode(SegmentBlock(p, (b"\x01", b"\x02"))).segments[2] == b"\x04"
    assert lagrange_eval([1, 2], [1, 2], 4) == 4
    # and a less obvious one, frozen from the oracle
    assert encode(SegmentBlock(p, (b"\x57", b"\x13"))).segments[2] == bytes([155])


@pytest.mark.parametrize("n,k", [(6, 3), (7, 4), (10, 5)])
def test_parity_matches_lagrange_oracle(n, k):
    rng = np.random.default_rng(n * 100 + k)
    p = CodeParams(n, k)
    xs = [get_field(8).alpha_pow(i) for i in range(n)]
    for _ in range(20):
        info = [int(v) for v in rng.integers(0, 256, k)]
        cw = encode(SegmentBlock(p, tuple(bytes([v]) for v in info)))
        expected = [lagrange_eval(xs[:k], info, x) for x in xs]
        assert [s[0] for s in cw.segments] == expected


def test_evaluation_points_are_powers_of_alpha():
    code = get_code(CodeParams(10, 4))
    x = 1
    for point in code.points:
        assert point == x
        x = poly_mul(x, 2)


def test_systematic_fast_path():
    p = CodeParams(6, 3, segment_size=4)
    info = random_block(np.random.default_rng(1), p)
    cw = encode(info)
    assert decode(cw.erase([3, 4, 5])) == info


def test_every_subset_decodes_k3_n6():
    rng = np.random.default_rng(2)
    p = CodeParams(6, 3, segment_size=16)
    info = random_block(rng, p)
    cw = encode(info)
    subsets = list(itertools.combinations(range(6), 3))
    assert len(subsets) == 20
    for keep in subsets:
        received = ReceivedSet(p, {i: cw.segments[i] for i in keep})
        assert decode(received) == info


@settings(max_examples=25)
@given(st.data())
def test_any_k_property(data):
    n = data.draw(st.integers(2, 9))
    k = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    p = CodeParams(n, k, segment_size=6)
    info = random_block(rng, p)
    cw = encode(info)
    for keep in itertools.combinations(range(n), k):
        assert decode(ReceivedSet(p, {i: cw.segments[i] for i in keep})) == info


@settings(max_examples=30)
@given(st.integers(2, 12), st.data())
def test_erasure_counts(n, data):
    k = data.draw(st.integers(1, n - 1))
    p = CodeParams(n, k, segment_size=3)
    info = random_block(np.random.default_rng(n + 31 * k), p)
    cw = encode(info)
    e = data.draw(st.integers(0, n - k))
    gone = data.draw(st.permutations(range(n)))[:e]
    assert decode(cw.erase(gone)) == info
    with pytest.raises(InsufficientSegments):
        decode(cw.erase(list(range(n - k + 1))))


def test_too_few_segments():
    p = CodeParams(6, 3)
    cw = encode(SegmentBlock(p, (b"a", b"b", b"c")))
    with pytest.raises(InsufficientSegments):
        decode(cw.erase([0, 1, 2, 3]))


@given(st.binary(min_size=8, max_size=8), st.binary(min_size=8, max_size=8))
def test_linearity(a, b):
    p = CodeParams(7, 2, segment_size=4)
    ba = SegmentBlock.from_bytes(p, a)
    bb = SegmentBlock.from_bytes(p, b)
    bx = SegmentBlock.from_bytes(p, bytes(x ^ y for x, y in zip(a, b)))
    ca, cb, cx = encode(ba), encode(bb), encode(bx)
    for sa, sb, sx in zip(ca.segments, cb.segments, cx.segments):
        assert bytes(x ^ y for x, y in zip(sa, sb)) == sx


@given(st.lists(st.binary(min_size=5, max_size=5), min_size=4, max_size=4))
def test_systematic(segments):
    p = CodeParams(9, 4, segment_size=5)
    assert encode(SegmentBlock(p, tuple(segments))).segments[:4] == tuple(segments)


@pytest.mark.parametrize("m,n,k", [(12, 20, 7), (16, 300, 44), (9, 40, 20)])
def test_wide_symbols_round_trip(m, n, k):
    rng = np.random.default_rng(m)
    p = CodeParams(n, k, segment_size=6, m=m)
    if m < 16:
        # symbols must stay below 2^m
        mask = (1 << m) - 1
        segs = []
        for _ in range(k):
            words = rng.integers(0, mask + 1, 3).astype(">u2")
            segs.append(words.tobytes())
        info = SegmentBlock(p, tuple(segs))
    else:
        info = random_block(rng, p)
    cw = encode(info)
    keep = sorted(rng.choice(n, size=k, replace=False).tolist())
    assert get_code(p).decode({i: cw.segments[i] for i in keep}) == info


def test_hamming_distance():
    v = [3, 1, 4]
    assert hamming_distance(v, v) == 0
    assert hamming_distance([0] * 5, [1] * 5) == 5
    assert hamming_distance([1, 2, 3, 4], [1, 0, 3, 0]) == 2
    with pytest.raises(LengthMismatch):
        hamming_distance([1], [1, 2])


@pytest.mark.parametrize("m,n,k", [(3, 7, 2), (2, 3, 1), (3, 5, 2), (2, 3, 2)])
def test_verify_mds_against_pairwise_oracle(m, n, k):
    p = CodeParams(n, k, 1, m)
    code = get_code(p)
    q = 1 << m
    words = []
    for info in all_info_vectors(q, k):
        sym = np.array(info, dtype=np.uint8).reshape(k, 1)
        words.append(code.encode_symbols(sym)[:, 0].tolist())
    d = brute_min_distance(words)
    assert d == n - k + 1
    assert verify_mds(p) == d


@pytest.mark.parametrize("m,n,k,expected", [
    (3, 7, 2, 6),
    (3, 7, 1, 7),
    (8, 5, 2, 4),
    (4, 9, 2, 8),
    (4, 15, 3, 13),
])
def test_verify_mds_known(m, n, k, expected):
    assert verify_mds(CodeParams(n, k, 1, m)) == expected


def test_verify_mds_field_override():
    assert verify_mds(CodeParams(5, 2), field_m=3) == 4


def test_verify_mds_refuses_huge_enumerations():
    with pytest.raises(TooLarge):
        verify_mds(CodeParams(16, 8))


@pytest.mark.parametrize("kwargs", [
    dict(n=3, k=4),
    dict(n=3, k=0),
    dict(n=300, k=43),  # 257 redundancy segments
    dict(n=256, k=2),  # more points than GF(2^8) has
    dict(n=5, k=2, m=1),
    dict(n=5, k=2, m=17),
    dict(n=5, k=2, segment_size=0),
    dict(n=5, k=2, m=12, segment_size=3),
])
def test_bad_params(kwargs):
    with pytest.raises(BadParams):
        CodeParams(**kwargs)


def test_redundancy_bound_boundary():
    assert CodeParams(300, 44, segment_size=2, m=16).redundancy == 256
    with pytest.raises(BadParams):
        CodeParams(300, 43, segment_size=2, m=16)


def test_shape_checks():
    p = CodeParams(5, 2, segment_size=2)
    with pytest.raises(LengthMismatch):
        SegmentBlock(p, (b"ab",))
    with pytest.raises(LengthMismatch):
        SegmentBlock(p, (b"ab", b"c"))
    with pytest.raises(LengthMismatch):
        Codeword(p, (b"ab",) * 4)
    with pytest.raises(BadParams):
        ReceivedSet(p, {7: b"ab"})
    with pytest.raises(LengthMismatch):
        SegmentBlock.from_bytes(p, b"12345")
    assert SegmentBlock.from_bytes(p, b"123").segments == (b"12", b"3\0")


def test_params_properties():
    p = CodeParams(16, 8)
    assert p.rate == 0.5
    assert p.d_min == 9
    assert p.redundancy == 8
