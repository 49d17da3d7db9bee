"""Arithmetic in GF(2**m) backed by exp/log tables.

Field elements are plain ints in ``range(2**m)``; bit ``i`` is the
coefficient of ``x**i``. Addition is XOR, multiplication goes through the
log tables of a primitive element (``x`` itself, since every polynomial
below is primitive).
"""
from __future__ import annotations

import functools

import numpy as np

from .errors import BadParams, ZeroInverse

# Primitive polynomials, one per supported degree. 0x11D is the usual
# byte-oriented Reed-Solomon choice.
PRIMITIVE_POLYNOMIALS = {
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}

MIN_M = 2
MAX_M = 16


class GaloisField:
    """The field GF(2**m) together with its exp/log tables.

    Instances are immutable after construction and cheap to share; use
    :func:`get_field` to obtain a cached instance.
    """

    def __init__(self, m: int = 8, poly: int | None = None):
        if not MIN_M <= m <= MAX_M:
            raise BadParams(f"field degree m={m} outside [{MIN_M}, {MAX_M}]")
        if poly is None:
            poly = PRIMITIVE_POLYNOMIALS[m]
        if poly >> m != 1:
            raise BadParams(f"polynomial {poly:#x} does not have degree {m}")
        self.m = m
        self.poly = poly
        self.order = 1 << m
        size = self.order - 1

        exp = np.zeros(2 * size, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(size):
            exp[i] = x
            x <<= 1
            if x & self.order:
                x ^= poly
        # the second copy lets mul skip the modulo
        exp[size:] = exp[:size]
        if len(set(exp[:size].tolist())) != size:
            raise BadParams(f"polynomial {poly:#x} is not primitive")
        log[exp[:size]] = np.arange(size)

        exp.flags.writeable = False
        log.flags.writeable = False
        self.exp = exp
        self.log = log
        self._exp_list = exp.tolist()
        self._log_list = log.tolist()
        self._mul_table = None
        if m <= 8:
            a = np.arange(self.order)
            la = log[a]
            table = exp[(la[:, None] + la[None, :])]
            table[0, :] = 0
            table[:, 0] = 0
            table = table.astype(np.uint8)
            table.flags.writeable = False
            self._mul_table = table

    def __repr__(self):
        return f"GaloisField(m={self.m}, poly={self.poly:#x})"

    @property
    def exp_table(self) -> np.ndarray:
        """Powers ``alpha**0 .. alpha**(2**m - 2)`` of the primitive element."""
        return self.exp[: self.order - 1]

    @property
    def log_table(self) -> np.ndarray:
        """Discrete logarithm of every nonzero element (entry 0 is unused)."""
        return self.log

    def _check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise BadParams(f"{a} is not an element of GF(2^{self.m})")
        return a

    def add(self, a: int, b: int) -> int:
        return self._check(a) ^ self._check(b)

    sub = add

    def mul(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        if a == 0 or b == 0:
            return 0
        return self._exp_list[self._log_list[a] + self._log_list[b]]

    def inv(self, a: int) -> int:
        if self._check(a) == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return self._exp_list[(self.order - 1 - self._log_list[a]) % (self.order - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        self._check(a)
        if a == 0:
            if e < 0:
                raise ZeroInverse("0 cannot be raised to a negative power")
            return 1 if e == 0 else 0
        return self._exp_list[(self._log_list[a] * e) % (self.order - 1)]

    def alpha_pow(self, i: int) -> int:
        """``alpha**i`` for the primitive element alpha = x."""
        return self._exp_list[i % (self.order - 1)]

    def scale(self, c: int, vec: np.ndarray) -> np.ndarray:
        """Multiply every symbol of ``vec`` by the scalar ``c``."""
        if c == 0:
            return np.zeros_like(vec)
        if c == 1:
            return vec.copy()
        if self._mul_table is not None:
            return self._mul_table[c][vec]
        out = self.exp[self.log[vec] + self._log_list[c]].astype(vec.dtype)
        out[vec == 0] = 0
        return out


@functools.lru_cache(maxsize=None)
def get_field(m: int = 8) -> GaloisField:
    return GaloisField(m)


GF256 = get_field(8)


def gf_add(a: int, b: int, field: GaloisField = GF256) -> int:
    return field.add(a, b)


def gf_mul(a: int, b: int, field: GaloisField = GF256) -> int:
    return field.mul(a, b)


def gf_inv(a: int, field: GaloisField = GF256) -> int:
    return field.inv(a)


def gf_pow(a: int, e: int, field: GaloisField = GF256) -> int:
    return field.pow(a, e)
