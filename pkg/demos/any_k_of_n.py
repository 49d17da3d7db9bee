"""Encode four segments into eight and rebuild them from any four."""
import itertools

import numpy as np

from nclayer.mds import CodeParams, ReceivedSet, SegmentBlock, decode, encode, verify_mds

params = CodeParams(n=8, k=4, segment_size=16)
rng = np.random.default_rng(7)
info = SegmentBlock(params, tuple(rng.bytes(16) for _ in range(params.k)))
codeword = encode(info)

for i, seg in enumerate(codeword.segments):
    kind = "info  " if i < params.k else "parity"
    print(f"{i} {kind} {seg.hex()}")

ok = 0
for keep in itertools.combinations(range(params.n), params.k):
    got = decode(ReceivedSet(params, {i: codeword.segments[i] for i in keep}))
    ok += got == info
print(f"{ok} of 70 four-segment subsets rebuild the block")

small = CodeParams(n=7, k=2, segment_size=1, m=3)
print(f"minimum distance of the (7, 2) code over GF(8): {verify_mds(small)} (n - k + 1 = 6)")
