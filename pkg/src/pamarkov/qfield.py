"""Exact arithmetic in real quadratic fields Q(sqrt(D)).

A :class:`QuadNum` stores ``(p + q*sqrt(D)) / r`` with integers ``p, q, r``,
``r > 0`` and ``gcd(p, q, r) == 1``.  All predicates (sign, comparison,
floor) are decided with integer arithmetic only.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd, isqrt
from numbers import Rational

__all__ = [
    "QuadNum",
    "QuadFieldError",
    "squarefree_part",
    "stretch_factor",
    "qf_arith",
    "qf_sign",
    "qf_floor",
]


class QuadFieldError(ValueError):
    """Raised on mixed-field arithmetic or invalid field data."""


def squarefree_part(n: int) -> tuple[int, int]:
    """Return ``(k, d)`` with ``n == k*k*d`` and ``d`` square-free (n > 0)."""
    if n <= 0:
        raise QuadFieldError(f"expected a positive integer, got {n}")
    k, d = 1, n
    f = 2
    while f * f <= d:
        while d % (f * f) == 0:
            d //= f * f
            k *= f
        f += 1
    return k, d


def _is_squarefree(d: int) -> bool:
    return d >= 2 and squarefree_part(d)[0] == 1


class QuadNum:
    __slots__ = ("p", "q", "r", "D")

    def __init__(self, p: int, q: int, r: int, D: int, *, _normalized: bool = False):
        if not _normalized:
            if r == 0:
                raise ZeroDivisionError("zero denominator")
            if r < 0:
                p, q, r = -p, -q, -r
            g = gcd(gcd(p, q), r)
            if g > 1:
                p, q, r = p // g, q // g, r // g
        self.p = p
        self.q = q
        self.r = r
        self.D = D

    # -- construction -----------------------------------------------------
    @classmethod
    def make(cls, a, b, D: int) -> "QuadNum":
        """Build ``a + b*sqrt(D)`` from rationals; ``D`` must be square-free."""
        if not _is_squarefree(D):
            raise QuadFieldError(f"D={D} is not a square-free integer >= 2")
        a = Fraction(a)
        b = Fraction(b)
        den = a.denominator * b.denominator // gcd(a.denominator, b.denominator)
        return cls(a.numerator * (den // a.denominator), b.numerator * (den // b.denominator), den, D)

    @classmethod
    def rational(cls, a, D: int) -> "QuadNum":
        a = Fraction(a)
        return cls(a.numerator, 0, a.denominator, D, _normalized=True)

    @property
    def a(self) -> Fraction:
        return Fraction(self.p, self.r)

    @property
    def b(self) -> Fraction:
        return Fraction(self.q, self.r)

    def is_rational(self) -> bool:
        return self.q == 0

    # -- coercion ---------------------------------------------------------
    def _coerce(self, other) -> "QuadNum":
        if isinstance(other, QuadNum):
            if other.D != self.D:
                raise QuadFieldError(f"mixed fields: sqrt({self.D}) vs sqrt({other.D})")
            return other
        if isinstance(other, int):
            return QuadNum(other, 0, 1, self.D, _normalized=True)
        if isinstance(other, Rational):
            f = Fraction(other)
            return QuadNum(f.numerator, 0, f.denominator, self.D, _normalized=True)
        return NotImplemented

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.r == o.r:
            return QuadNum(self.p + o.p, self.q + o.q, self.r, self.D)
        return QuadNum(self.p * o.r + o.p * self.r, self.q * o.r + o.q * self.r, self.r * o.r, self.D)

    __radd__ = __add__

    def __neg__(self):
        return QuadNum(-self.p, -self.q, self.r, self.D, _normalized=True)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadNum(
            self.p * o.p + self.q * o.q * self.D,
            self.p * o.q + self.q * o.p,
            self.r * o.r,
            self.D,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadNum":
        norm = self.p * self.p - self.q * self.q * self.D
        if norm == 0:
            # only possible for zero since D is not a square
            raise ZeroDivisionError("QuadNum division by zero")
        return QuadNum(self.r * self.p, -self.r * self.q, norm, self.D)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = QuadNum(1, 0, 1, self.D, _normalized=True)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "QuadNum":
        return QuadNum(self.p, -self.q, self.r, self.D, _normalized=True)

    # -- predicates -------------------------------------------------------
    def sign(self) -> int:
        p, q = self.p, self.q
        if q == 0:
            return (p > 0) - (p < 0)
        if p >= 0 and q > 0:
            return 1
        if p <= 0 and q < 0:
            return -1
        # opposite signs: compare p^2 with q^2 D
        lhs = p * p
        rhs = q * q * self.D
        if lhs == rhs:
            return 0
        if p > 0:
            return 1 if lhs > rhs else -1
        return -1 if lhs > rhs else 1

    def __bool__(self):
        return self.p != 0 or self.q != 0

    def __eq__(self, other):
        if isinstance(other, QuadNum):
            return self.p == other.p and self.q == other.q and self.r == other.r and self.D == other.D
        if isinstance(other, (int, Rational)):
            f = Fraction(other)
            return self.q == 0 and self.p == f.numerator and self.r == f.denominator
        return NotImplemented

    def __hash__(self):
        if self.q == 0:
            return hash(Fraction(self.p, self.r))
        return hash((self.p, self.q, self.r, self.D))

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is NotImplemented:
            raise TypeError(f"cannot compare QuadNum with {type(other).__name__}")
        return (self - o).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def floor(self) -> int:
        # q*sqrt(D) lies strictly between m and m+1 (or equals m when q == 0)
        if self.q == 0:
            return self.p // self.r
        m = isqrt(self.q * self.q * self.D)
        if self.q < 0:
            m = -m - 1
        k = (self.p + m) // self.r
        while (self - (k + 1)).sign() >= 0:
            k += 1
        while (self - k).sign() < 0:
            k -= 1
        return k

    def __floor__(self):
        return self.floor()

    def __float__(self):
        return (self.p + self.q * self.D ** 0.5) / self.r

    # -- serialization ----------------------------------------------------
    def __str__(self):
        a, b = self.a, self.b
        sign = "-" if b < 0 else "+"
        return f"{a.numerator}/{a.denominator}{sign}{abs(b.numerator)}/{b.denominator}*sqrt({self.D})"

    def __repr__(self):
        return f"QuadNum({self})"

    _PATTERN = re.compile(
        r"^\s*([+-]?\d+)(?:/(\d+))?\s*(?:([+-])\s*(\d+)(?:/(\d+))?\s*\*\s*sqrt\((\d+)\))?\s*$"
    )

    @classmethod
    def parse(cls, text: str, D: int | None = None) -> "QuadNum":
        """Parse ``p/q+r/s*sqrt(D)``; a bare rational needs ``D`` supplied."""
        m = cls._PATTERN.match(text)
        if not m:
            raise QuadFieldError(f"cannot parse {text!r}")
        a = Fraction(int(m.group(1)), int(m.group(2) or 1))
        if m.group(3):
            b = Fraction(int(m.group(4)), int(m.group(5) or 1))
            if m.group(3) == "-":
                b = -b
            d = int(m.group(6))
            if D is not None and D != d:
                raise QuadFieldError(f"expected sqrt({D}), got sqrt({d})")
            return cls.make(a, b, d)
        if D is None:
            raise QuadFieldError("rational literal needs an explicit D")
        return cls.make(a, 0, D)

    def to_json(self) -> dict:
        a, b = self.a, self.b
        return {"a_num": a.numerator, "a_den": a.denominator, "b_num": b.numerator, "b_den": b.denominator, "D": self.D}

    @classmethod
    def from_json(cls, obj: dict) -> "QuadNum":
        return cls.make(Fraction(obj["a_num"], obj["a_den"]), Fraction(obj["b_num"], obj["b_den"]), obj["D"])


def stretch_factor(trace: int) -> QuadNum:
    """Largest root in absolute value of ``x^2 - t x + 1`` as ``|t|/2 + k/2*sqrt(D)``."""
    disc = trace * trace - 4
    if disc <= 0:
        raise QuadFieldError(f"|trace| = {abs(trace)} <= 2 is not hyperbolic")
    k, d = squarefree_part(disc)
    if d == 1:
        raise QuadFieldError(f"trace {trace} gives a rational eigenvalue")
    return QuadNum.make(Fraction(abs(trace), 2), Fraction(k, 2), d)


def qf_arith(x: QuadNum, y: QuadNum, op: str) -> QuadNum:
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown op {op!r}")


def qf_sign(x: QuadNum) -> int:
    return x.sign()


def qf_floor(x: QuadNum) -> int:
    return x.floor()
