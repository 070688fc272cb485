"""Exact dyadic time points and the interval algebra built on them.

Every temporal value in the engine is a dyadic rational (an integer divided
by a power of two) or one of the two infinities.  Dyadics are closed under
addition and subtraction, so all interval arithmetic below is exact: there
is no rounding anywhere, and equal values are equal bit for bit thanks to a
canonical reduced representation.

The module provides:

  * TimePoint        - dyadic rational or +/- infinity
  * Interval         - nonempty interval with open/closed ends
  * Range            - interval with nonnegative endpoints (operator windows)
  * the interval operations the rule engine relies on: shift operations
    plus_o/minus_o (pointwise sums/differences), the window-contraction
    operations plus_c/minus_c, intersection, single-interval union,
    closure, the fits() guard, the strict interval order precedes(), and
    gcd of finite dyadic sets
  * text parsing/formatting for points and intervals, including the
    s/m/h/d unit suffixes and HH:MM:SS clock sugar
"""

from __future__ import annotations

import re
from math import gcd as _int_gcd


class UndefinedArithmetic(ArithmeticError):
    """Raised for operations with no defined value, e.g. inf + (-inf).

    These cannot arise from well-formed inputs; raising instead of
    saturating keeps bugs loud.
    """


# ---------------------------------------------------------------------------
# TimePoint
# ---------------------------------------------------------------------------

# kind markers; finite points use _FIN
_FIN = 0
_POS = 1
_NEG = -1


class TimePoint:
    """A dyadic rational n / 2**e, or +infinity / -infinity.

    Finite values are kept reduced: the numerator is odd unless the
    exponent is zero, and zero is stored as (0, 0).  That makes equality
    and hashing structural.
    """

    __slots__ = ("kind", "num", "exp")

    def __init__(self, num: int, exp: int = 0, _kind: int = _FIN):
        if _kind != _FIN:
            self.kind = _kind
            self.num = 0
            self.exp = 0
            return
        if exp < 0:
            raise ValueError("exponent must be nonnegative")
        # reduce: strip common factors of two
        while num != 0 and exp > 0 and num % 2 == 0:
            num //= 2
            exp -= 1
        if num == 0:
            exp = 0
        self.kind = _FIN
        self.num = num
        self.exp = exp

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_int(n: int) -> "TimePoint":
        return TimePoint(n, 0)

    @staticmethod
    def from_decimal(text: str) -> "TimePoint":
        """Parse a decimal string; reject values that are not dyadic.

        A decimal d1.d2 has denominator 10**k = 2**k * 5**k, so it is
        dyadic exactly when the numerator is divisible by 5**k.
        """
        text = text.strip()
        m = re.fullmatch(r"([+-]?)(\d+)(?:\.(\d+))?", text)
        if not m:
            raise ValueError(f"not a decimal number: {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        whole, frac = m.group(2), m.group(3) or ""
        k = len(frac)
        numerator = int(whole + frac) if frac else int(whole)
        five = 5 ** k
        if numerator % five != 0:
            raise ValueError(
                f"{text!r} is not a dyadic rational (denominator has a factor of 5); "
                f"use a binary-fraction value such as 0.5, 0.25, 0.125"
            )
        return TimePoint(sign * (numerator // five), k)

    # -- predicates ---------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == _FIN

    # -- comparisons --------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimePoint):
            return NotImplemented
        return (
            self.num == other.num and self.exp == other.exp and self.kind == other.kind
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.num, self.exp))

    def __lt__(self, other: "TimePoint") -> bool:
        if self.kind != _FIN or other.kind != _FIN:
            return self.kind < other.kind
        # n1/2^e1 < n2/2^e2  <=>  n1 * 2^(e2) < n2 * 2^(e1) scaled to common exp
        if self.exp == other.exp:
            return self.num < other.num
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp) < other.num << (e - other.exp)

    def __le__(self, other: "TimePoint") -> bool:
        return self == other or self < other

    def __gt__(self, other: "TimePoint") -> bool:
        return other < self

    def __ge__(self, other: "TimePoint") -> bool:
        return other <= self

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other: "TimePoint") -> "TimePoint":
        if self.kind == _FIN and other.kind == _FIN:
            e = max(self.exp, other.exp)
            n = (self.num << (e - self.exp)) + (other.num << (e - other.exp))
            return TimePoint(n, e)
        if self.kind == _FIN:
            return other
        if other.kind == _FIN:
            return self
        if self.kind != other.kind:
            raise UndefinedArithmetic("inf + (-inf) has no value")
        return self

    def __neg__(self) -> "TimePoint":
        if self.kind == _POS:
            return NEG_INF
        if self.kind == _NEG:
            return POS_INF
        return TimePoint(-self.num, self.exp)

    def __sub__(self, other: "TimePoint") -> "TimePoint":
        return self + (-other)

    def __mul__(self, factor: int) -> "TimePoint":
        """Scale by an integer (unit conversion); infinities keep their sign."""
        if not isinstance(factor, int):
            return NotImplemented
        if self.kind != _FIN:
            if factor <= 0:
                raise UndefinedArithmetic("scaling an infinity by a nonpositive integer")
            return self
        return TimePoint(self.num * factor, self.exp)

    # -- formatting ---------------------------------------------------

    def __str__(self) -> str:
        return format_point(self)

    def __repr__(self) -> str:
        return f"TimePoint({format_point(self)})"


POS_INF = TimePoint(0, 0, _kind=_POS)
NEG_INF = TimePoint(0, 0, _kind=_NEG)
ZERO = TimePoint(0)


def tp_add(a: TimePoint, b: TimePoint) -> TimePoint:
    """Exact sum; raises UndefinedArithmetic on inf + (-inf)."""
    return a + b


def tp_sub(a: TimePoint, b: TimePoint) -> TimePoint:
    return a - b


# ---------------------------------------------------------------------------
# Interval
# ---------------------------------------------------------------------------


class Interval:
    """A nonempty interval over TimePoints.

    Invariants enforced by the constructor:
      * lo <= hi, and if lo == hi both ends are closed (the punctual case);
        empty intervals are not representable, operations that can produce
        the empty set return None instead
      * an infinite endpoint is always open ([t, inf] is identified with
        [t, inf), and the constructor performs that identification)
    """

    __slots__ = ("lo", "lo_closed", "hi", "hi_closed")

    def __init__(self, lo: TimePoint, lo_closed: bool, hi: TimePoint, hi_closed: bool):
        if not lo.is_finite:
            lo_closed = False
        if not hi.is_finite:
            hi_closed = False
        if hi < lo:
            raise ValueError(f"interval bounds out of order: {format_point(lo)} > {format_point(hi)}")
        if lo == hi and not (lo_closed and hi_closed):
            raise ValueError("empty interval (equal bounds need both ends closed)")
        self.lo = lo
        self.lo_closed = lo_closed
        self.hi = hi
        self.hi_closed = hi_closed

    @property
    def punctual(self) -> bool:
        return self.lo == self.hi

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return (
            self.lo_closed == other.lo_closed
            and self.hi_closed == other.hi_closed
            and self.lo == other.lo
            and self.hi == other.hi
        )

    def __hash__(self) -> int:
        return hash((self.lo, self.lo_closed, self.hi, self.hi_closed))

    def __str__(self) -> str:
        return format_interval(self)

    def __repr__(self) -> str:
        return f"Interval{format_interval(self)}"

    # -- point membership --------------------------------------------

    def contains_point(self, t: TimePoint) -> bool:
        if t < self.lo or (t == self.lo and not self.lo_closed):
            return False
        if self.hi < t or (t == self.hi and not self.hi_closed):
            return False
        return True

    def contains_interval(self, other: "Interval") -> bool:
        """Set containment: other is a subset of self."""
        if other.lo < self.lo:
            return False
        if other.lo == self.lo and other.lo_closed and not self.lo_closed:
            return False
        if self.hi < other.hi:
            return False
        if other.hi == self.hi and other.hi_closed and not self.hi_closed:
            return False
        return True


class Range(Interval):
    """An interval with nonnegative endpoints, used as an operator window.

    After program normalization every Range is punctual [r,r] or fully
    open (r1,r2); the shift operations below insist on that shape.
    """

    def __init__(self, lo: TimePoint, lo_closed: bool, hi: TimePoint, hi_closed: bool):
        super().__init__(lo, lo_closed, hi, hi_closed)
        if self.lo < ZERO:
            raise ValueError(f"range with negative endpoint: {format_interval(self)}")

    @property
    def shape_ok(self) -> bool:
        """True for the post-normalization shapes: punctual or fully open."""
        if self.punctual:
            return True
        return not self.lo_closed and not self.hi_closed


def as_range(i: Interval) -> Range:
    return i if isinstance(i, Range) else Range(i.lo, i.lo_closed, i.hi, i.hi_closed)


# ---------------------------------------------------------------------------
# Interval operations
# ---------------------------------------------------------------------------


def interval_precedes(a: Interval, b: Interval) -> bool:
    """The strict linear order on intervals.

    a comes before b iff
      * a.lo < b.lo, or
      * equal left bounds and a is left-closed while b is left-open, or
      * equal left bounds of the same kind and a.hi < b.hi, or
      * additionally equal right bounds and a is right-open while b is
        right-closed.

    Example chain: [3,8) < [4,7) < (4,6) < (4,7) < (4,7].
    """
    if a.lo != b.lo:
        return a.lo < b.lo
    if a.lo_closed != b.lo_closed:
        return a.lo_closed
    if a.hi != b.hi:
        return a.hi < b.hi
    if a.hi_closed != b.hi_closed:
        return not a.hi_closed
    return False


def interval_sort_key(i: Interval):
    """Sort key realizing the same order as interval_precedes."""
    return _PrecKey(i)


class _PrecKey:
    __slots__ = ("i",)

    def __init__(self, i: Interval):
        self.i = i

    def __lt__(self, other: "_PrecKey") -> bool:
        return interval_precedes(self.i, other.i)

    def __eq__(self, other) -> bool:
        return self.i == other.i


def intersect(a: Interval, b: Interval) -> Interval | None:
    """Set intersection; None when the intersection is empty."""
    if a.lo > b.lo:
        lo, lo_closed = a.lo, a.lo_closed
    elif b.lo > a.lo:
        lo, lo_closed = b.lo, b.lo_closed
    else:
        lo, lo_closed = a.lo, a.lo_closed and b.lo_closed
    if a.hi < b.hi:
        hi, hi_closed = a.hi, a.hi_closed
    elif b.hi < a.hi:
        hi, hi_closed = b.hi, b.hi_closed
    else:
        hi, hi_closed = a.hi, a.hi_closed and b.hi_closed
    if hi < lo:
        return None
    if lo == hi and not (lo_closed and hi_closed):
        return None
    return Interval(lo, lo_closed, hi, hi_closed)


def union_if_interval(a: Interval, b: Interval) -> Interval | None:
    """The set union of a and b when it is a single interval, else None.

    The union is a single interval iff the two overlap, or they are
    exactly adjacent with at least one closed touching end.
    """
    # order so that a starts no later than b
    if b.lo < a.lo or (b.lo == a.lo and b.lo_closed and not a.lo_closed):
        a, b = b, a
    # gap test: a ends strictly before b starts
    if a.hi < b.lo:
        return None
    if a.hi == b.lo and not a.hi_closed and not b.lo_closed:
        return None  # point gap at the touching bound
    if a.lo == b.lo:
        lo, lo_closed = a.lo, a.lo_closed or b.lo_closed
    else:
        lo, lo_closed = a.lo, a.lo_closed
    if a.hi > b.hi:
        hi, hi_closed = a.hi, a.hi_closed
    elif b.hi > a.hi:
        hi, hi_closed = b.hi, b.hi_closed
    else:
        hi, hi_closed = a.hi, a.hi_closed or b.hi_closed
    return Interval(lo, lo_closed, hi, hi_closed)


def closure(a: Interval) -> Interval:
    """Close both finite ends; infinite ends stay open by representation."""
    return Interval(a.lo, a.lo.is_finite, a.hi, a.hi.is_finite)


def _span_at_least(i: Interval, r: Range) -> bool:
    """hi(r) - lo(r) <= hi(i) - lo(i), infinity-aware (never computes inf - inf)."""
    i_infinite = not i.hi.is_finite or not i.lo.is_finite
    r_infinite = not r.hi.is_finite  # r.lo is always finite (nonnegative)
    if r_infinite:
        return i_infinite
    if i_infinite:
        return True
    return r.hi - r.lo <= i.hi - i.lo


def fits(r: Range, i: Interval) -> bool:
    """Guard for plus_c/minus_c: the window r is no wider than i."""
    return _span_at_least(i, r)


def _require_shape(r: Range) -> None:
    if not r.shape_ok:
        raise ValueError(
            f"range {format_interval(r)} is neither punctual nor open; "
            "normalize the program before evaluating"
        )


def plus_o(i: Interval, r: Range) -> Interval:
    """Pointwise sums {t + k | t in i, k in r}."""
    _require_shape(r)
    if r.punctual:
        return Interval(i.lo + r.lo, i.lo_closed, i.hi + r.lo, i.hi_closed)
    return Interval(i.lo + r.lo, False, i.hi + r.hi, False)


def minus_o(i: Interval, r: Range) -> Interval:
    """Pointwise differences {t - k | t in i, k in r}."""
    _require_shape(r)
    if r.punctual:
        return Interval(i.lo - r.lo, i.lo_closed, i.hi - r.lo, i.hi_closed)
    return Interval(i.lo - r.hi, False, i.hi - r.lo, False)


def minus_c(i: Interval, r: Range) -> Interval | None:
    """Points whose whole forward window lies inside i:
    {t | t + k in i for all k in r}.  None when r does not fit in i.
    """
    _require_shape(r)
    if not fits(r, i):
        return None
    if r.punctual:
        return Interval(i.lo - r.lo, i.lo_closed, i.hi - r.lo, i.hi_closed)
    if not i.hi.is_finite:
        return Interval(i.lo - r.lo, True, POS_INF, False)
    if r.hi.is_finite:
        return Interval(i.lo - r.lo, True, i.hi - r.hi, True)
    # unbounded window against a bounded right end: no witness point keeps
    # the whole window inside, even though the span guard accepts the pair
    return None


def plus_c(i: Interval, r: Range) -> Interval | None:
    """Points whose whole backward window lies inside i:
    {t | t - k in i for all k in r}.  None when r does not fit in i.
    """
    _require_shape(r)
    if not fits(r, i):
        return None
    if r.punctual:
        return Interval(i.lo + r.lo, i.lo_closed, i.hi + r.lo, i.hi_closed)
    if not i.lo.is_finite:
        return Interval(NEG_INF, False, i.hi + r.lo, True)
    if r.hi.is_finite:
        return Interval(i.lo + r.hi, True, i.hi + r.lo, True)
    return None


def gcd_dyadic(points) -> TimePoint:
    """Largest dyadic d > 0 such that every point is an integer multiple of d.

    By convention gcd({0}) = 1.  All points must be finite.
    """
    points = list(points)
    if not points:
        raise ValueError("gcd of an empty set")
    scale = 0
    for p in points:
        if not p.is_finite:
            raise ValueError("gcd over an infinite point")
        scale = max(scale, p.exp)
    g = 0
    for p in points:
        g = _int_gcd(g, abs(p.num) << (scale - p.exp))
    if g == 0:
        return TimePoint(1)
    return TimePoint(g, scale)


# ---------------------------------------------------------------------------
# Text forms
# ---------------------------------------------------------------------------

# unit suffixes, base unit one second
_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400}

_CLOCK_RE = re.compile(r"([+-]?)(\d{1,2}):(\d{2})(?::(\d{2}))?")
_NUMBER_RE = re.compile(r"([+-]?)(\d+(?:\.\d+)?)([smhd]?)")


def format_point(t: TimePoint) -> str:
    """Exact decimal text; dyadics always have a finite decimal expansion."""
    if t.kind == _POS:
        return "inf"
    if t.kind == _NEG:
        return "-inf"
    if t.exp == 0:
        return str(t.num)
    digits = abs(t.num) * 5 ** t.exp  # n/2^e == n*5^e / 10^e
    text = str(digits).rjust(t.exp + 1, "0")
    whole, frac = text[: -t.exp], text[-t.exp:]
    sign = "-" if t.num < 0 else ""
    return f"{sign}{whole}.{frac}"


def format_point_clock(t: TimePoint) -> str:
    """HH:MM:SS for whole-second values in [0, 86400); decimal otherwise."""
    if t.kind == _FIN and t.exp == 0 and 0 <= t.num < 86400:
        h, rest = divmod(t.num, 3600)
        m, s = divmod(rest, 60)
        return f"{h:02d}:{m:02d}:{s:02d}"
    return format_point(t)


def format_interval(i: Interval, clock: bool = False) -> str:
    fmt = format_point_clock if clock else format_point
    left = "[" if i.lo_closed else "("
    right = "]" if i.hi_closed else ")"
    return f"{left}{fmt(i.lo)},{fmt(i.hi)}{right}"


def parse_point(text: str) -> TimePoint:
    """Parse one time value: 'inf', '-inf', clock HH:MM[:SS], or a decimal
    with an optional s/m/h/d unit suffix.  Non-dyadic decimals are rejected.
    """
    text = text.strip()
    if text == "inf" or text == "+inf":
        return POS_INF
    if text == "-inf":
        return NEG_INF
    m = _CLOCK_RE.fullmatch(text)
    if m:
        sign = -1 if m.group(1) == "-" else 1
        h, mnt = int(m.group(2)), int(m.group(3))
        sec = int(m.group(4)) if m.group(4) else 0
        if mnt >= 60 or sec >= 60:
            raise ValueError(f"bad clock literal {text!r}")
        return TimePoint(sign * (h * 3600 + mnt * 60 + sec))
    m = _NUMBER_RE.fullmatch(text)
    if m:
        sign, body, unit = m.group(1), m.group(2), m.group(3)
        value = TimePoint.from_decimal(sign + body)
        if unit:
            value = value * _UNITS[unit]
        return value
    raise ValueError(f"cannot parse time value {text!r}")


def parse_interval(text: str) -> Interval:
    """Parse '[a,b]', '(a,b)', '[a,b)' or '(a,b]'."""
    text = text.strip()
    if len(text) < 5 or text[0] not in "[(" or text[-1] not in ")]":
        raise ValueError(f"cannot parse interval {text!r}")
    lo_closed = text[0] == "["
    hi_closed = text[-1] == "]"
    body = text[1:-1]
    depth_safe = body.split(",")
    if len(depth_safe) != 2:
        raise ValueError(f"interval needs exactly one comma: {text!r}")
    lo = parse_point(depth_safe[0])
    hi = parse_point(depth_safe[1])
    return Interval(lo, lo_closed, hi, hi_closed)


def parse_range(text: str) -> Range:
    return as_range(parse_interval(text))
