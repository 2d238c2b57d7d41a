"""Polynomials over GF(2) packed into a single machine word.

Bit k of ``PolyF2.bits`` is the coefficient of z^k. Degrees are capped at 63.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

MAX_DEGREE = 63


class PolyDegreeError(OverflowError):
    pass


def _degree(a: int) -> int:
    return a.bit_length() - 1


def clmul(a: int, b: int) -> int:
    """Carry-less product of two bit-packed polynomials (no degree cap)."""
    if a < b:
        a, b = b, a
    c = 0
    while b:
        if b & 1:
            c ^= a
        a <<= 1
        b >>= 1
    return c


def _divmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise ZeroDivisionError("division by zero polynomial")
    q = 0
    db = _degree(b)
    while a and _degree(a) >= db:
        shift = _degree(a) - db
        q |= 1 << shift
        a ^= b << shift
    return q, a


@dataclass(frozen=True, order=True)
class PolyF2:
    bits: int = 0

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("coefficient bitset must be nonnegative")
        if _degree(self.bits) > MAX_DEGREE:
            raise PolyDegreeError(
                f"degree {_degree(self.bits)} exceeds the supported maximum {MAX_DEGREE}"
            )

    @classmethod
    def from_coeffs(cls, coeffs) -> PolyF2:
        """Build from coefficients listed lowest degree first."""
        bits = 0
        for k, c in enumerate(coeffs):
            if c & 1:
                bits |= 1 << k
        return cls(bits)

    @classmethod
    def parse(cls, text: str) -> PolyF2:
        """Parse strings like ``"1+z^2+z^5"`` (also ``"0"``)."""
        text = text.replace(" ", "")
        if text == "0":
            return cls(0)
        bits = 0
        for term in text.split("+"):
            m = re.fullmatch(r"1|z(?:\^(\d+))?", term)
            if not m:
                raise ValueError(f"cannot parse polynomial term {term!r}")
            k = 0 if term == "1" else int(m.group(1) or 1)
            bits ^= 1 << k
        return cls(bits)

    @classmethod
    def repunit(cls, r: int) -> PolyF2:
        """v_r(z) = 1 + z + ... + z^(r-1)."""
        if r < 1:
            raise ValueError("r must be positive")
        return cls((1 << r) - 1)

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return _degree(self.bits)

    @property
    def weight(self) -> int:
        return bin(self.bits).count("1")

    def is_zero(self) -> bool:
        return self.bits == 0

    def __bool__(self) -> bool:
        return self.bits != 0

    def __add__(self, other: PolyF2) -> PolyF2:
        return PolyF2(self.bits ^ other.bits)

    __sub__ = __add__

    def __mul__(self, other: PolyF2) -> PolyF2:
        return PolyF2(clmul(self.bits, other.bits))

    def __divmod__(self, other: PolyF2) -> tuple[PolyF2, PolyF2]:
        q, r = _divmod(self.bits, other.bits)
        return PolyF2(q), PolyF2(r)

    def __floordiv__(self, other: PolyF2) -> PolyF2:
        return divmod(self, other)[0]

    def __mod__(self, other: PolyF2) -> PolyF2:
        return divmod(self, other)[1]

    def divides(self, other: PolyF2) -> bool:
        return (other % self).is_zero()

    def __str__(self) -> str:
        if not self.bits:
            return "0"
        terms = []
        for k in range(self.degree + 1):
            if self.bits >> k & 1:
                terms.append("1" if k == 0 else "z" if k == 1 else f"z^{k}")
        return "+".join(terms)


def gcd_f2(a: PolyF2, b: PolyF2) -> PolyF2:
    """Greatest common divisor by Euclid's algorithm.

    Over GF(2) every nonzero polynomial is monic, so the result is unique.
    """
    if a.is_zero() and b.is_zero():
        raise ValueError("gcd of two zero polynomials is undefined")
    x, y = a.bits, b.bits
    while y:
        x, y = y, _divmod(x, y)[1]
    return PolyF2(x)
