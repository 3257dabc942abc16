"""Exact arithmetic in a real quadratic field Q(sqrt d).

A :class:`Surd` stores ``(p + q*sqrt(d)) / r`` with arbitrary precision
integer components.  Rationals are Surds with ``q == 0`` and ``d == 0``, so
the same type carries every parameter, interval endpoint, measure and
Birkhoff sum value in the package.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional, Union

__all__ = [
    "Surd",
    "Fixed",
    "RadicandError",
    "surd_make",
    "surd_arith",
    "surd_compare",
    "surd_floor",
    "surd_to_decimal",
    "parse_literal",
    "format_literal",
]

Number = Union["Surd", int, Fraction]


class RadicandError(ValueError):
    """Operands live in different quadratic fields."""


@lru_cache(maxsize=256)
def _squarefree(d: int) -> bool:
    if d < 0:
        return False
    if d in (0, 1):
        return True
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


class Fixed(NamedTuple):
    """Binary fixed-point number ``mant / 2**bits``."""

    mant: int
    bits: int

    def __float__(self) -> float:
        return math.ldexp(self.mant, -self.bits) if abs(self.mant) < (1 << 1000) else float(
            Fraction(self.mant, 1 << self.bits)
        )

    def as_fraction(self) -> Fraction:
        return Fraction(self.mant, 1 << self.bits)


class Surd:
    """Immutable element ``(p + q*sqrt(d)) / r`` of Q(sqrt d) in canonical form."""

    __slots__ = ("p", "q", "r", "d", "_hash")

    def __init__(self, p: int = 0, q: int = 0, r: int = 1, d: int = 0):
        if r == 0:
            raise ZeroDivisionError("Surd denominator is zero")
        if not _squarefree(d):
            raise ValueError(f"radicand {d} is not a non-negative squarefree integer")
        self._set(int(p), int(q), int(r), int(d))

    @classmethod
    def _new(cls, p: int, q: int, r: int, d: int) -> "Surd":
        obj = object.__new__(cls)
        obj._set(p, q, r, d)
        return obj

    def _set(self, p: int, q: int, r: int, d: int) -> None:
        if d == 1:
            p, q, d = p + q, 0, 0
        if q == 0 or d == 0:
            q, d = 0, 0
        if r < 0:
            p, q, r = -p, -q, -r
        g = math.gcd(math.gcd(p, q), r)
        if g > 1:
            p, q, r = p // g, q // g, r // g
        self.p, self.q, self.r, self.d = p, q, r, d
        self._hash = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def coerce(cls, x: Number) -> "Surd":
        if isinstance(x, Surd):
            return x
        if isinstance(x, int):
            return cls._new(x, 0, 1, 0)
        if isinstance(x, Fraction):
            return cls._new(x.numerator, 0, x.denominator, 0)
        raise TypeError(f"cannot convert {type(x).__name__} to Surd")

    @classmethod
    def sqrt(cls, d: int) -> "Surd":
        return cls(0, 1, 1, d)

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def as_fraction(self) -> Fraction:
        if self.q:
            raise ValueError(f"{self} is irrational")
        return Fraction(self.p, self.r)

    def conjugate(self) -> "Surd":
        return Surd._new(self.p, -self.q, self.r, self.d)

    # -- arithmetic ------------------------------------------------------------

    @staticmethod
    def _radicand(a: "Surd", b: "Surd") -> int:
        if a.d == b.d or b.d == 0:
            return a.d
        if a.d == 0:
            return b.d
        raise RadicandError(f"incompatible radicands {a.d} and {b.d}")

    def __add__(self, other):
        try:
            b = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        d = Surd._radicand(self, b)
        if self.r == b.r:
            return Surd._new(self.p + b.p, self.q + b.q, self.r, d)
        return Surd._new(self.p * b.r + b.p * self.r, self.q * b.r + b.q * self.r, self.r * b.r, d)

    __radd__ = __add__

    def __neg__(self):
        return Surd._new(-self.p, -self.q, self.r, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        try:
            b = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-b)

    def __rsub__(self, other):
        try:
            b = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return b + (-self)

    def __mul__(self, other):
        try:
            b = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        d = Surd._radicand(self, b)
        return Surd._new(
            self.p * b.p + self.q * b.q * d,
            self.p * b.q + self.q * b.p,
            self.r * b.r,
            d,
        )

    __rmul__ = __mul__

    def inverse(self) -> "Surd":
        norm = self.p * self.p - self.q * self.q * self.d
        if norm == 0:
            # only possible for p == q == 0 since d is squarefree and not 1
            raise ZeroDivisionError("Surd division by zero")
        return Surd._new(self.r * self.p, -self.r * self.q, norm, self.d)

    def __truediv__(self, other):
        try:
            b = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return self * b.inverse()

    def __rtruediv__(self, other):
        try:
            b = Surd.coerce(other)
        except TypeError:
            return NotImplemented
        return b * self.inverse()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- ordering ---------------------------------------------------------------

    def sign(self) -> int:
        """Exact sign of the value, by integer case analysis on ``p + q*sqrt(d)``."""
        p, q = self.p, self.q
        if q == 0:
            return (p > 0) - (p < 0)
        if p >= 0 and q > 0:
            return 1
        if p <= 0 and q < 0:
            return -1
        t = p * p - q * q * self.d
        # t != 0 because d is not a perfect square
        if p > 0:
            return 1 if t > 0 else -1
        return -1 if t > 0 else 1

    def _cmp(self, other) -> int:
        b = Surd.coerce(other)
        if self.q == 0 and b.q == 0:
            lhs, rhs = self.p * b.r, b.p * self.r
            return (lhs > rhs) - (lhs < rhs)
        return (self - b).sign()

    def __eq__(self, other):
        if isinstance(other, Surd):
            return (self.p, self.q, self.r, self.d) == (other.p, other.q, other.r, other.d)
        if isinstance(other, (int, Fraction)):
            return self.q == 0 and Fraction(self.p, self.r) == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            if self.q == 0:
                self._hash = hash(Fraction(self.p, self.r))
            else:
                self._hash = hash((self.p, self.q, self.r, self.d))
        return self._hash

    def __lt__(self, other):
        try:
            return self._cmp(other) < 0
        except TypeError:
            return NotImplemented

    def __le__(self, other):
        try:
            return self._cmp(other) <= 0
        except TypeError:
            return NotImplemented

    def __gt__(self, other):
        try:
            return self._cmp(other) > 0
        except TypeError:
            return NotImplemented

    def __ge__(self, other):
        try:
            return self._cmp(other) >= 0
        except TypeError:
            return NotImplemented

    def __bool__(self):
        return self.p != 0 or self.q != 0

    # -- rounding and approximation ---------------------------------------------

    def floor(self) -> int:
        if self.q == 0:
            return self.p // self.r
        s = math.isqrt(self.q * self.q * self.d)
        # q*sqrt(d) is irrational, so floor(q*sqrt d) is s or -s-1
        m = s if self.q > 0 else -s - 1
        return (self.p + m) // self.r

    def __floor__(self):
        return self.floor()

    def frac(self) -> "Surd":
        return self - self.floor()

    def to_decimal(self, frac_bits: int = 64) -> tuple[Fixed, Fixed]:
        """Fixed-point approximation with a guaranteed error bound.

        Returns ``(approx, err)`` with ``|approx - self| <= err <= 2**(2 - frac_bits)``.
        """
        if frac_bits < 32:
            raise ValueError("frac_bits must be at least 32")
        if self.q == 0:
            num = self.p << frac_bits
            mant, rem = divmod(num, self.r)
            return Fixed(mant, frac_bits), Fixed(0 if rem == 0 else 1, frac_bits)
        g = 2
        G = frac_bits + g
        s = math.isqrt(self.q * self.q * self.d << (2 * G))
        t = s if self.q > 0 else -s - 1
        num = (self.p << G) + t
        mant = num // (self.r << g)
        return Fixed(mant, frac_bits), Fixed(2, frac_bits)

    def __float__(self) -> float:
        if self.q == 0:
            return self.p / self.r
        approx, _ = self.to_decimal(80)
        return float(approx)

    # -- text -------------------------------------------------------------------

    def literal(self) -> str:
        return format_literal(self)

    def __repr__(self):
        return f"Surd({self.p}, {self.q}, {self.r}, {self.d})"

    def __str__(self):
        if self.q == 0:
            return str(self.p) if self.r == 1 else f"{self.p}/{self.r}"
        rad = f"√{self.d}" if abs(self.q) == 1 else f"{abs(self.q)}√{self.d}"
        if self.p == 0:
            num = rad if self.q > 0 else f"-{rad}"
        else:
            num = f"{self.p}{'+' if self.q > 0 else '-'}{rad}"
        return num if self.r == 1 else f"({num})/{self.r}"


# ---------------------------------------------------------------------------
# functional surface


def surd_make(p: int, q: int, r: int, d: int) -> Surd:
    return Surd(p, q, r, d)


def surd_arith(a: Surd, b: Surd, op: str) -> Surd:
    ops = {
        "add": Surd.__add__,
        "sub": Surd.__sub__,
        "mul": Surd.__mul__,
        "div": Surd.__truediv__,
    }
    if op not in ops:
        raise ValueError(f"unknown op {op!r}")
    return ops[op](Surd.coerce(a), b)


def surd_compare(a: Surd, b: Surd) -> str:
    c = Surd.coerce(a)._cmp(b)
    return {-1: "less", 0: "equal", 1: "greater"}[c]


def surd_floor(a: Surd) -> int:
    return Surd.coerce(a).floor()


def surd_to_decimal(a: Surd, frac_bits: int) -> tuple[Fixed, Fixed]:
    return Surd.coerce(a).to_decimal(frac_bits)


# ---------------------------------------------------------------------------
# literal grammar: rat:<p>/<r> | surd:<d>:<p>:<q>:<r> | inalpha:<up>/<ur>:<vp>/<vr>


def _parse_ratio(text: str) -> Fraction:
    num, sep, den = text.partition("/")
    if not sep:
        raise ValueError(f"expected <p>/<r>, got {text!r}")
    return Fraction(int(num), int(den))


def parse_literal(text: str, alpha: Optional[Surd] = None) -> Surd:
    """Parse a number literal.

    ``inalpha:u:v`` denotes ``u + v*alpha`` and needs ``alpha``.
    """
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise ValueError(f"malformed literal {text!r}")
    try:
        if kind == "rat":
            return Surd.coerce(_parse_ratio(body))
        if kind == "surd":
            d, p, q, r = (int(t) for t in body.split(":"))
            return Surd(p, q, r, d)
        if kind == "inalpha":
            if alpha is None:
                raise ValueError("inalpha literal needs alpha")
            u, v = body.split(":")
            return _parse_ratio(u) + _parse_ratio(v) * alpha
    except ZeroDivisionError as exc:
        raise ValueError(f"malformed literal {text!r}: {exc}") from None
    raise ValueError(f"malformed literal {text!r}")


def format_literal(x: Surd) -> str:
    x = Surd.coerce(x)
    if x.q == 0:
        return f"rat:{x.p}/{x.r}"
    return f"surd:{x.d}:{x.p}:{x.q}:{x.r}"
