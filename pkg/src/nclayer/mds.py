"""Systematic MDS erasure code over GF(2**m), interleaved per symbol column.

A codeword is ``n`` equal-length segments. Column ``j`` of the codeword
(the ``j``-th symbol of every segment) holds the evaluations at
``alpha**0 .. alpha**(n-1)`` of the unique polynomial of degree < k whose
values at the first ``k`` points are the ``j``-th symbols of the
information segments. Any ``k`` segments therefore pin down the whole
codeword.

For ``m <= 8`` one symbol is one byte. For ``9 <= m <= 16`` a symbol is a
big-endian 16-bit word, so ``segment_size`` must be even.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadParams, InsufficientSegments, LengthMismatch, TooLarge
from .galois import GaloisField, get_field

MAX_REDUNDANCY = 256  # width of the 8-bit symbol indicator
ENUMERATION_LIMIT = 1 << 20


@dataclass(frozen=True)
class CodeParams:
    n: int
    k: int
    segment_size: int = 1
    m: int = 8

    def __post_init__(self):
        if not 2 <= self.m <= 16:
            raise BadParams(f"field degree m={self.m} outside [2, 16]")
        if not 1 <= self.k <= self.n:
            raise BadParams(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if self.n - self.k > MAX_REDUNDANCY:
            raise BadParams(
                f"n - k = {self.n - self.k} redundancy segments exceed the "
                f"{MAX_REDUNDANCY} addressable by the symbol indicator"
            )
        if self.n > (1 << self.m) - 1:
            raise BadParams(f"n={self.n} needs more distinct nonzero points than GF(2^{self.m}) has")
        if self.segment_size < 1:
            raise BadParams("segment_size must be positive")
        if self.m > 8 and self.segment_size % 2:
            raise BadParams("16-bit symbols need an even segment_size")

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def d_min(self) -> int:
        """Minimum distance of an MDS code with these parameters."""
        return self.n - self.k + 1

    @property
    def redundancy(self) -> int:
        return self.n - self.k


def _check_lengths(params: CodeParams, segments: Iterable[bytes]):
    for seg in segments:
        if len(seg) != params.segment_size:
            raise LengthMismatch(
                f"segment of {len(seg)} bytes, expected {params.segment_size}"
            )


@dataclass(frozen=True)
class SegmentBlock:
    """The ``k`` information segments of one codeword."""

    params: CodeParams
    segments: tuple[bytes, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(bytes(s) for s in self.segments))
        if len(self.segments) != self.params.k:
            raise LengthMismatch(f"{len(self.segments)} segments, expected k={self.params.k}")
        _check_lengths(self.params, self.segments)

    @classmethod
    def from_bytes(cls, params: CodeParams, data: bytes) -> "SegmentBlock":
        """Split ``data`` into ``k`` segments, zero-padding on the right."""
        total = params.k * params.segment_size
        if len(data) > total:
            raise LengthMismatch(f"{len(data)} bytes do not fit in {total}")
        data = bytes(data).ljust(total, b"\0")
        s = params.segment_size
        return cls(params, tuple(data[i * s:(i + 1) * s] for i in range(params.k)))


@dataclass(frozen=True)
class Codeword:
    params: CodeParams
    segments: tuple[bytes, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(bytes(s) for s in self.segments))
        if len(self.segments) != self.params.n:
            raise LengthMismatch(f"{len(self.segments)} segments, expected n={self.params.n}")
        _check_lengths(self.params, self.segments)

    def erase(self, positions: Iterable[int]) -> "ReceivedSet":
        """The received set left after erasing ``positions``."""
        gone = set(positions)
        return ReceivedSet(
            self.params,
            {i: s for i, s in enumerate(self.segments) if i not in gone},
        )


@dataclass(frozen=True)
class ReceivedSet:
    """Segments of one codeword that survived, keyed by codeword position."""

    params: CodeParams
    entries: Mapping[int, bytes] = field(default_factory=dict)

    def __post_init__(self):
        entries = {int(p): bytes(s) for p, s in dict(self.entries).items()}
        for p in entries:
            if not 0 <= p < self.params.n:
                raise BadParams(f"position {p} outside [0, {self.params.n - 1}]")
        _check_lengths(self.params, entries.values())
        object.__setattr__(self, "entries", entries)


class MdsCode:
    """Encoder/decoder for one parameter set. Immutable; share freely."""

    def __init__(self, params: CodeParams):
        self.params = params
        self.field: GaloisField = get_field(params.m)
        self.points = [self.field.alpha_pow(i) for i in range(params.n)]
        k = params.k
        self.parity = [
            self._lagrange_row(self.points[:k], self.points[j])
            for j in range(k, params.n)
        ]

    def __repr__(self):
        p = self.params
        return f"MdsCode(n={p.n}, k={p.k}, segment_size={p.segment_size}, m={p.m})"

    def _lagrange_row(self, xs: Sequence[int], x: int) -> list[int]:
        """Coefficients ``L_i(x)`` of the Lagrange basis on ``xs``."""
        f = self.field
        row = []
        for i, xi in enumerate(xs):
            num = den = 1
            for j, xj in enumerate(xs):
                if j != i:
                    num = f.mul(num, x ^ xj)
                    den = f.mul(den, xi ^ xj)
            row.append(f.div(num, den))
        return row

    # -- symbol level -------------------------------------------------

    def _combine(self, coeffs: Sequence[int], rows: Sequence[np.ndarray]) -> np.ndarray:
        acc = np.zeros_like(rows[0])
        for c, row in zip(coeffs, rows):
            if c:
                acc ^= self.field.scale(c, row)
        return acc

    def encode_symbols(self, info: np.ndarray) -> np.ndarray:
        """Encode a ``(k, L)`` symbol array into an ``(n, L)`` array."""
        info = np.asarray(info)
        if info.shape[0] != self.params.k:
            raise LengthMismatch(f"{info.shape[0]} rows, expected k={self.params.k}")
        rows = list(info)
        out = np.empty((self.params.n,) + info.shape[1:], dtype=info.dtype)
        out[: self.params.k] = info
        for j, coeffs in enumerate(self.parity):
            out[self.params.k + j] = self._combine(coeffs, rows)
        return out

    def decode_symbols(self, received: Mapping[int, np.ndarray]) -> np.ndarray:
        """Recover the ``(k, L)`` information array from ``>= k`` known rows."""
        k = self.params.k
        if len(received) < k:
            raise InsufficientSegments(f"{len(received)} segments received, need k={k}")
        # prefer systematic rows: they need no arithmetic
        chosen = sorted(received)[:k]
        have = set(chosen)
        xs = [self.points[p] for p in chosen]
        rows = [np.asarray(received[p]) for p in chosen]
        out = np.empty((k,) + rows[0].shape, dtype=rows[0].dtype)
        for i in range(k):
            if i in have:
                out[i] = received[i]
            else:
                out[i] = self._combine(self._lagrange_row(xs, self.points[i]), rows)
        return out

    # -- byte level ---------------------------------------------------

    def _to_symbols(self, data: bytes) -> np.ndarray:
        if self.params.m > 8:
            sym = np.frombuffer(data, dtype=">u2").astype(np.uint16)
        else:
            sym = np.frombuffer(data, dtype=np.uint8).copy()
        if self.params.m not in (8, 16) and sym.size and int(sym.max()) >= (1 << self.params.m):
            raise BadParams(f"symbol value exceeds GF(2^{self.params.m})")
        return sym

    def _from_symbols(self, sym: np.ndarray) -> bytes:
        if self.params.m > 8:
            return sym.astype(">u2").tobytes()
        return sym.astype(np.uint8).tobytes()

    def encode(self, info: SegmentBlock | Sequence[bytes]) -> Codeword:
        if not isinstance(info, SegmentBlock):
            info = SegmentBlock(self.params, tuple(info))
        elif info.params != self.params:
            raise BadParams("block was built for different code parameters")
        sym = np.stack([self._to_symbols(s) for s in info.segments])
        coded = self.encode_symbols(sym)
        return Codeword(
            self.params,
            info.segments + tuple(self._from_symbols(r) for r in coded[self.params.k:]),
        )

    def decode(self, received: ReceivedSet | Mapping[int, bytes]) -> SegmentBlock:
        if not isinstance(received, ReceivedSet):
            received = ReceivedSet(self.params, received)
        entries = received.entries
        k = self.params.k
        if len(entries) < k:
            raise InsufficientSegments(f"{len(entries)} segments received, need k={k}")
        if all(i in entries for i in range(k)):
            return SegmentBlock(self.params, tuple(entries[i] for i in range(k)))
        sym = {p: self._to_symbols(s) for p, s in entries.items()}
        info = self.decode_symbols(sym)
        return SegmentBlock(self.params, tuple(self._from_symbols(r) for r in info))


@functools.lru_cache(maxsize=64)
def get_code(params: CodeParams) -> MdsCode:
    return MdsCode(params)


def encode(info: SegmentBlock) -> Codeword:
    return get_code(info.params).encode(info)


def decode(received: ReceivedSet) -> SegmentBlock:
    return get_code(received.params).decode(received)


def hamming_distance(a: Sequence, b: Sequence) -> int:
    """Number of coordinates in which ``a`` and ``b`` differ."""
    if len(a) != len(b):
        raise LengthMismatch(f"lengths {len(a)} and {len(b)} differ")
    return sum(x != y for x, y in zip(a, b))


def verify_mds(params: CodeParams, field_m: int | None = None) -> int:
    """Measure the minimum distance by enumerating every codeword.

    Each codeword is treated as a vector of ``n`` single symbols. The code
    is linear, so the minimum distance equals the smallest weight of a
    nonzero codeword; all ``q**k`` information vectors are encoded at once
    as the columns of one ``(k, q**k)`` array.
    """
    m = params.m if field_m is None else field_m
    params = CodeParams(params.n, params.k, 1, m)
    q = 1 << m
    if q ** params.k > ENUMERATION_LIMIT:
        raise TooLarge(f"{q}^{params.k} codewords exceed the limit of {ENUMERATION_LIMIT}")
    dtype = np.uint8 if m <= 8 else np.uint16
    info = np.array(list(itertools.product(range(q), repeat=params.k)), dtype=dtype).T
    coded = get_code(params).encode_symbols(info)
    weights = np.count_nonzero(coded, axis=0)
    return int(weights[1:].min()) if weights.size > 1 else params.n
