"""Quick codec self-checks behind ``nclayer verify``.

Each check returns ``(name, passed, detail)``. They are small versions of
the properties the test suite covers exhaustively, meant for a sanity pass
on a fresh install.
"""
from __future__ import annotations

import itertools

import numpy as np

from .galois import GF256
from .mds import CodeParams, get_code, verify_mds


def _poly_mul(a: int, b: int, poly: int = 0x11D) -> int:
    """Shift-and-add multiplication with reduction, independent of the tables."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= poly
    return r


def check_field() -> tuple[str, bool, str]:
    bad = [
        (a, b) for a in range(1, 256) for b in range(1, 256)
        if GF256.mul(a, b) != _poly_mul(a, b)
    ]
    bad_inv = [a for a in range(1, 256) if GF256.mul(a, GF256.inv(a)) != 1]
    ok = not bad and not bad_inv
    return "field GF(2^8) mul/inv", ok, f"{len(bad)} bad products, {len(bad_inv)} bad inverses"


def check_any_k(n: int, k: int, blocks: int = 5, seed: int = 0) -> tuple[str, bool, str]:
    rng = np.random.default_rng(seed)
    params = CodeParams(n, k, segment_size=8)
    code = get_code(params)
    failures = 0
    patterns = 0
    for _ in range(blocks):
        info = [rng.bytes(8) for _ in range(k)]
        cw = code.encode(info)
        for keep in itertools.combinations(range(n), k):
            patterns += 1
            got = code.decode({i: cw.segments[i] for i in keep})
            failures += list(got.segments) != info
    return f"any {k} of {n} decode", failures == 0, f"{failures}/{patterns} patterns failed"


def check_distance(m: int, n: int, k: int) -> tuple[str, bool, str]:
    d = verify_mds(CodeParams(n, k, 1, m))
    return f"min distance (m={m}, n={n}, k={k})", d == n - k + 1, f"d={d}, n-k+1={n - k + 1}"


def run_checks() -> list[tuple[str, bool, str]]:
    results = [check_field()]
    results += [check_any_k(n, k) for n, k in [(6, 3), (8, 4), (10, 5), (12, 8)]]
    results += [check_distance(*p) for p in [(3, 7, 1), (3, 7, 2), (4, 9, 2), (8, 5, 2)]]
    return results
