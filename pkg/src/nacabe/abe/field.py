"""Arithmetic in GF(p) with the Mersenne prime p = 2**61 - 1.

Field elements are plain ``int`` values in ``[0, p)``.
"""

from __future__ import annotations

import random
from typing import Iterable, Sequence

P = (1 << 61) - 1
ELEMENT_SIZE = 8


def reduce(x: int) -> int:
    # Mersenne folding; valid for any 0 <= x < 2**122
    x = (x & P) + (x >> 61)
    x = (x & P) + (x >> 61)
    return 0 if x == P else x


def mul(a: int, b: int) -> int:
    return reduce(a * b)


def add(a: int, b: int) -> int:
    s = a + b
    return s - P if s >= P else s


def sub(a: int, b: int) -> int:
    return a - b if a >= b else a - b + P


def inv(a: int) -> int:
    if a % P == 0:
        raise ZeroDivisionError("0 has no inverse in GF(p)")
    return pow(a, P - 2, P)


def random_element(rng: random.Random) -> int:
    return rng.randrange(P)


def random_nonzero(rng: random.Random) -> int:
    while True:
        v = rng.randrange(P)
        if v:
            return v


def poly_eval(coeffs: Sequence[int], x: int) -> int:
    """Horner evaluation; ``coeffs[0]`` is the constant term."""
    acc = 0
    for c in reversed(coeffs):
        acc = add(mul(acc, x), c)
    return acc


def random_poly(constant: int, degree: int, rng: random.Random) -> list[int]:
    return [constant] + [random_element(rng) for _ in range(degree)]


def lagrange_at_zero(i: int, indices: Iterable[int]) -> int:
    """Coefficient of share ``i`` when interpolating at x = 0 over ``indices``."""
    num, den = 1, 1
    for j in indices:
        if j == i:
            continue
        num = mul(num, j % P)
        den = mul(den, sub(j % P, i % P))
    return mul(num, inv(den))


def interpolate_at_zero(shares: dict[int, int]) -> int:
    idx = list(shares)
    acc = 0
    for i, y in shares.items():
        acc = add(acc, mul(lagrange_at_zero(i, idx), y))
    return acc


def to_bytes(x: int) -> bytes:
    return x.to_bytes(ELEMENT_SIZE, "big")


def from_bytes(b: bytes) -> int:
    if len(b) != ELEMENT_SIZE:
        raise ValueError("field element must be 8 bytes")
    v = int.from_bytes(b, "big")
    if v >= P:
        raise ValueError("field element out of range")
    return v
