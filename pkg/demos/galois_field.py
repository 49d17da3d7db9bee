"""Arithmetic in GF(2^8) with the log/antilog tables."""
from nclayer.galois import GF256, gf_add, gf_inv, gf_mul, gf_pow

a, b = 0x53, 0xCA
print(f"{a:#04x} + {b:#04x} = {gf_add(a, b):#04x}  (xor)")
print(f"{a:#04x} * {b:#04x} = {gf_mul(a, b):#04x}")
print(f"inverse of {a:#04x} is {gf_inv(a):#04x}, check: {gf_mul(a, gf_inv(a))}")
print(f"x^8 reduces to {gf_pow(2, 8):#04x} under polynomial {GF256.poly:#05x}")
print("first powers of x:", [hex(v) for v in GF256.exp_table[:12]])
