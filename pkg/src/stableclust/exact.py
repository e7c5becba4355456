"""Exact real arithmetic for sums of square roots of rationals.

Distances in the reductions are square roots of rationals and k-median costs
are sums of them.  :class:`RadicalSum` keeps such sums in a canonical form
``r + sum(c_i * sqrt(n_i))`` with rational ``r, c_i`` and pairwise independent
integer radicands, so equality is a symbolic test and ordering falls back to
interval arithmetic with increasing precision only when floats cannot decide.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Union

import mpmath

__all__ = [
    "RadicalSum",
    "Exact",
    "sqrt_rational",
    "exact_square",
    "parse_exact",
    "format_exact",
    "to_fraction",
    "ceil_exact",
    "rational_upper_bound",
]

_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % d for d in range(2, int(p ** 0.5) + 1))]

# raw radicand -> (canonical radicand, multiplier) with sqrt(raw) = multiplier * sqrt(canonical)
_CANON: dict[int, tuple[int, int | Fraction]] = {}
# small-prime signature -> canonical radicands registered so far
_BUCKETS: dict[int, list[int]] = {}


def _is_square(n: int) -> int | None:
    if n < 0:
        return None
    s = math.isqrt(n)
    return s if s * s == n else None


def _canonical(n: int) -> tuple[int, int | Fraction]:
    hit = _CANON.get(n)
    if hit is not None:
        return hit
    s = _is_square(n)
    if s is not None:
        _CANON[n] = (1, s)
        return _CANON[n]
    m, mult, sig = n, 1, 1
    for p in _SMALL_PRIMES:
        pp = p * p
        if pp > m:
            break
        while m % pp == 0:
            m //= pp
            mult *= p
        if m % p == 0:
            sig *= p
    s = _is_square(m)
    if s is not None:
        result: tuple[int, int | Fraction] = (1, mult * s)
    else:
        bucket = _BUCKETS.setdefault(sig, [])
        result = (m, mult)
        for b in bucket:
            g = _is_square(m * b)
            if g is not None:
                result = (b, Fraction(mult * g, b))
                break
        else:
            bucket.append(m)
    _CANON[n] = result
    return result


class RadicalSum:
    """An exact real ``rational + sum(coeff * sqrt(radicand))``.

    Instances are immutable.  Arithmetic that cancels every radical returns a
    plain :class:`~fractions.Fraction`, so a ``RadicalSum`` always has at least
    one irrational term.
    """

    __slots__ = ("_rat", "_terms", "_float")

    def __init__(self, rational=0, terms=None):
        self._rat = Fraction(rational)
        self._terms: dict[int, Fraction] = {}
        for n, c in (terms or {}).items():
            if c:
                self._add_term(int(n), Fraction(c))
        self._float = None

    def _add_term(self, n: int, c: Fraction) -> None:
        key, mult = _canonical(n)
        c = c * mult
        if key == 1:
            self._rat += c
            return
        v = self._terms.get(key, 0) + c
        if v:
            self._terms[key] = v
        else:
            self._terms.pop(key, None)

    @classmethod
    def _build(cls, rational, terms) -> "Exact":
        out = cls.__new__(cls)
        out._rat = rational
        out._terms = terms
        out._float = None
        return out._collapse()

    def _collapse(self) -> "Exact":
        if not self._terms:
            return self._rat
        return self

    @property
    def rational_part(self) -> Fraction:
        return self._rat

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def is_single_radical(self) -> bool:
        return self._rat == 0 and len(self._terms) == 1

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, RadicalSum):
            terms = dict(self._terms)
            for n, c in other._terms.items():
                v = terms.get(n, 0) + c
                if v:
                    terms[n] = v
                else:
                    terms.pop(n, None)
            return RadicalSum._build(self._rat + other._rat, terms)
        if isinstance(other, (int, Fraction)):
            return RadicalSum._build(self._rat + other, dict(self._terms))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return RadicalSum._build(-self._rat, {n: -c for n, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (RadicalSum, int, Fraction)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Fraction(0)
            return RadicalSum._build(self._rat * other, {n: c * other for n, c in self._terms.items()})
        if isinstance(other, RadicalSum):
            out = RadicalSum(self._rat * other._rat)
            for n, c in self._terms.items():
                if other._rat:
                    out._add_term(n, c * other._rat)
            for n, c in other._terms.items():
                if self._rat:
                    out._add_term(n, c * self._rat)
            for n1, c1 in self._terms.items():
                for n2, c2 in other._terms.items():
                    out._add_term(n1 * n2, c1 * c2)
            return out._collapse()
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def square(self) -> "Exact":
        return self * self

    # ordering -----------------------------------------------------------
    def __float__(self) -> float:
        if self._float is None:
            parts = [float(self._rat)] + [float(c) * math.sqrt(n) for n, c in self._terms.items()]
            f = math.fsum(parts)
            if abs(f) < 1e-12 * sum(abs(p) for p in parts):
                f = float(mpmath.mpf(_interval(self, 256).mid))
            self._float = f
        return self._float

    def _sign(self) -> int:
        try:
            f = float(self)
            scale = abs(float(self._rat)) + sum(abs(float(c)) * math.sqrt(n) for n, c in self._terms.items())
        except OverflowError:
            f, scale = 0.0, math.inf
        bound = scale * 1e-13 * (len(self._terms) + 2)
        if abs(f) > bound:
            return 1 if f > 0 else -1
        prec = 128
        while prec <= 1 << 17:
            acc = _interval(self, prec)
            if acc.a > 0:
                return 1
            if acc.b < 0:
                return -1
            prec *= 2
        raise ArithmeticError("could not resolve sign of a nonzero radical sum")

    def _cmp(self, other) -> int:
        if not isinstance(other, (RadicalSum, int, Fraction)):
            return NotImplemented
        diff = self - other
        if isinstance(diff, RadicalSum):
            return diff._sign()
        return (diff > 0) - (diff < 0)

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c >= 0

    def __eq__(self, other):
        if isinstance(other, RadicalSum):
            return self._rat == other._rat and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return not self._terms and self._rat == other
        return NotImplemented

    def __hash__(self):
        if not self._terms:
            return hash(self._rat)
        return hash((self._rat, frozenset(self._terms.items())))

    def __reduce__(self):
        return (RadicalSum, (self._rat, dict(self._terms)))

    def __repr__(self):
        return f"RadicalSum({format_exact(self)!r})"

    def __str__(self):
        return format_exact(self)


Exact = Union[Fraction, RadicalSum]


def _interval(v: RadicalSum, prec: int):
    iv = mpmath.iv
    saved = iv.prec
    iv.prec = prec
    try:
        acc = iv.mpf(v._rat.numerator) / v._rat.denominator
        for n, c in v._terms.items():
            acc += (iv.mpf(c.numerator) / c.denominator) * iv.sqrt(iv.mpf(n))
        return acc
    finally:
        iv.prec = saved


@lru_cache(maxsize=1 << 16)
def sqrt_rational(q) -> Exact:
    """Exact square root of a nonnegative rational."""
    q = Fraction(q)
    if q < 0:
        raise ValueError(f"square root of negative rational {q}")
    if q == 0:
        return Fraction(0)
    key, mult = _canonical(q.numerator * q.denominator)
    coeff = Fraction(mult) / q.denominator
    if key == 1:
        return coeff
    return RadicalSum._build(Fraction(0), {key: coeff})


def exact_square(v: Exact) -> Fraction:
    """Square of an exact value, required to be rational."""
    if isinstance(v, RadicalSum):
        sq = v * v
        if isinstance(sq, RadicalSum):
            raise ValueError(f"square of {v} is not rational")
        return sq
    return Fraction(v) ** 2


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def parse_exact(text: str) -> Exact:
    """Parse ``"p/q"``, a decimal, or ``"sqrt(p/q)"``."""
    s = text.strip()
    if s.startswith("sqrt(") and s.endswith(")"):
        return sqrt_rational(Fraction(s[5:-1]))
    if "*sqrt(" in s:
        coeff, rest = s.split("*sqrt(", 1)
        if not rest.endswith(")"):
            raise ValueError(f"malformed radical {text!r}")
        return Fraction(coeff) * sqrt_rational(Fraction(rest[:-1]))
    return Fraction(s)


def _fmt_rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_exact(v) -> str:
    """Canonical text form: reduced rationals, radicals as ``c*sqrt(n)``."""
    if isinstance(v, RadicalSum):
        parts = []
        if v._rat:
            parts.append(_fmt_rat(v._rat))
        for n in sorted(v._terms):
            c = v._terms[n]
            parts.append(f"sqrt({n})" if c == 1 else f"{_fmt_rat(c)}*sqrt({n})")
        return " + ".join(parts)
    return _fmt_rat(Fraction(v))


def ceil_exact(v: Exact) -> int:
    if isinstance(v, RadicalSum):
        f = math.floor(float(v))
        for cand in (f - 1, f, f + 1, f + 2):
            if v <= cand:
                return cand
        raise ArithmeticError("ceil of radical sum out of float range")
    return math.ceil(Fraction(v))


def rational_upper_bound(v: Exact, bits: int = 200) -> Fraction:
    """Smallest-ish rational ``q >= v`` with denominator ``2**bits``."""
    if not isinstance(v, RadicalSum):
        return Fraction(v)
    hi = _interval(v, bits + 64).b
    with mpmath.workprec(bits + 64):
        q = Fraction(int(mpmath.ceil(mpmath.mpf(hi) * (1 << bits))), 1 << bits)
    while q < v:
        q += Fraction(1, 1 << bits)
    return q
