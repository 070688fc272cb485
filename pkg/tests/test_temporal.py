"""Unit tests for the time-point and interval layer."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from dmtl.temporal import (
    Interval,
    NEG_INF,
    POS_INF,
    Range,
    TimePoint,
    UndefinedArithmetic,
    ZERO,
    closure,
    fits,
    format_interval,
    format_point,
    format_point_clock,
    gcd_dyadic,
    intersect,
    interval_precedes,
    interval_sort_key,
    minus_c,
    minus_o,
    parse_interval,
    parse_point,
    parse_range,
    plus_c,
    plus_o,
    union_if_interval,
)

import oracles


def tp(text: str) -> TimePoint:
    return parse_point(text)


def iv(text: str) -> Interval:
    return parse_interval(text)


def rg(text: str) -> Range:
    return parse_range(text)


# ---------------------------------------------------------------------------
# TimePoint arithmetic
# ---------------------------------------------------------------------------


class TestTimePoint:
    def test_add_exact(self):
        assert tp("1.5") + tp("0.25") == tp("1.75")

    def test_add_infinity_absorbs(self):
        assert tp("3") + POS_INF == POS_INF
        assert NEG_INF + tp("100") == NEG_INF

    def test_add_binary_fractions(self):
        # 0.101b + 0.011b = 0.625 + 0.375 = 1, cross-checked in integers
        # at the common denominator 8: numerators 5 + 3 = 8
        a, b = tp("0.625"), tp("0.375")
        assert a + b == tp("1")
        assert Fraction(5, 8) + Fraction(3, 8) == 1
        assert oracles.frac(a + b) == Fraction(5, 8) + Fraction(3, 8)

    def test_opposite_infinities_error(self):
        with pytest.raises(UndefinedArithmetic):
            POS_INF + NEG_INF
        with pytest.raises(UndefinedArithmetic):
            NEG_INF - NEG_INF

    def test_canonical_form_unique(self):
        assert TimePoint(4, 1) == TimePoint(2, 0)
        assert TimePoint(4, 1).exp == 0
        assert TimePoint(0, 5) == TimePoint(0, 0)

    def test_ordering(self):
        assert NEG_INF < tp("-1000000") < tp("0.0625") < tp("1") < POS_INF

    def test_non_dyadic_rejected(self):
        with pytest.raises(ValueError, match="dyadic"):
            parse_point("0.1")
        with pytest.raises(ValueError, match="dyadic"):
            parse_point("1.3")

    def test_units_and_clock(self):
        assert tp("1m") == tp("60")
        assert tp("1.5m") == tp("90")
        assert tp("24h") == tp("86400")
        assert tp("2d") == tp("172800")
        assert tp("13:00:00") == tp("46800")
        assert tp("13:01") == tp("46860")

    def test_format_round_trip(self):
        for text in ("0", "-3", "2.5", "0.0625", "-0.375", "inf", "-inf"):
            assert format_point(tp(text)) == text

    def test_clock_format(self):
        assert format_point_clock(tp("46800")) == "13:00:00"
        assert format_point_clock(tp("86400")) == "86400"
        assert format_point_clock(tp("-5")) == "-5"

    @given(st.integers(-(2**40), 2**40), st.integers(0, 20),
           st.integers(-(2**40), 2**40), st.integers(0, 20))
    def test_add_matches_fractions(self, n1, e1, n2, e2):
        a, b = TimePoint(n1, e1), TimePoint(n2, e2)
        assert oracles.frac(a + b) == oracles.frac(a) + oracles.frac(b)
        assert oracles.frac(a - b) == oracles.frac(a) - oracles.frac(b)

    @given(st.integers(-(2**40), 2**40), st.integers(0, 20))
    def test_parse_format_round_trip(self, n, e):
        t = TimePoint(n, e)
        assert parse_point(format_point(t)) == t


# ---------------------------------------------------------------------------
# Interval construction and the precedence order
# ---------------------------------------------------------------------------


def intervals_strategy():
    point = st.builds(TimePoint, st.integers(-256, 256), st.integers(0, 5))
    some_point = st.one_of(st.just(NEG_INF), point, st.just(POS_INF))

    def build(a, b, lc, hc):
        if not a.is_finite or not b.is_finite:
            pass
        if a.is_finite and b.is_finite and b < a:
            a, b = b, a
        if a == b:
            if not a.is_finite:
                return None
            lc = hc = True
        if a.kind > 0 or b.kind < 0:
            a, b = b, a
        try:
            return Interval(a, lc, b, hc)
        except ValueError:
            return None

    return st.builds(build, some_point, some_point, st.booleans(), st.booleans()).filter(
        lambda x: x is not None
    )


class TestIntervalOrder:
    def test_spec_chain(self):
        chain = [iv("[3,8)"), iv("[4,7)"), iv("(4,6)"), iv("(4,7)"), iv("(4,7]")]
        for a, b in zip(chain, chain[1:]):
            assert interval_precedes(a, b)
            assert not interval_precedes(b, a)

    def test_irreflexive(self):
        assert not interval_precedes(iv("[1,2]"), iv("[1,2]"))

    @given(intervals_strategy(), intervals_strategy())
    def test_trichotomy(self, a, b):
        outcomes = [interval_precedes(a, b), interval_precedes(b, a), a == b]
        assert outcomes.count(True) == 1

    @given(intervals_strategy(), intervals_strategy(), intervals_strategy())
    def test_transitive(self, a, b, c):
        if interval_precedes(a, b) and interval_precedes(b, c):
            assert interval_precedes(a, c)

    def test_sort_key_orders_like_precedes(self):
        items = [iv("(4,7)"), iv("[3,8)"), iv("(4,7]"), iv("[4,7)"), iv("(4,6)")]
        items.sort(key=interval_sort_key)
        assert items == [iv("[3,8)"), iv("[4,7)"), iv("(4,6)"), iv("(4,7)"), iv("(4,7]")]

    def test_empty_unrepresentable(self):
        with pytest.raises(ValueError):
            Interval(tp("2"), True, tp("1"), True)
        with pytest.raises(ValueError):
            Interval(tp("1"), True, tp("1"), False)

    def test_infinite_ends_forced_open(self):
        i = Interval(NEG_INF, True, tp("3"), True)
        assert not i.lo_closed


# ---------------------------------------------------------------------------
# Set operations
# ---------------------------------------------------------------------------


class TestSetOps:
    def test_intersect_examples(self):
        assert intersect(iv("[0,4]"), iv("(2,6)")) == iv("(2,4]")
        assert intersect(iv("[0,1)"), iv("[1,2]")) is None
        assert intersect(iv("(-inf,5]"), iv("[5,5]")) == iv("[5,5]")

    def test_union_examples(self):
        assert union_if_interval(iv("[0,1]"), iv("(1,2)")) == iv("[0,2)")
        assert union_if_interval(iv("(0,1)"), iv("(1,2)")) is None
        assert union_if_interval(iv("(0,3)"), iv("[2,5]")) == iv("(0,5]")

    def test_union_symmetric_and_contained(self):
        assert union_if_interval(iv("(5,9)"), iv("[0,1]")) is None
        assert union_if_interval(iv("[0,10]"), iv("(2,3)")) == iv("[0,10]")

    def test_closure(self):
        assert closure(iv("(1,2)")) == iv("[1,2]")
        assert closure(iv("[0,0]")) == iv("[0,0]")
        assert closure(iv("(-inf,3)")) == iv("(-inf,3]")

    @given(intervals_strategy())
    def test_closure_idempotent(self, a):
        assert closure(closure(a)) == closure(a)

    @given(intervals_strategy())
    def test_intersect_with_closure_is_identity(self, a):
        assert intersect(a, closure(a)) == a

    @given(intervals_strategy())
    def test_intersect_self(self, a):
        assert intersect(a, a) == a
        assert union_if_interval(a, a) == a


# ---------------------------------------------------------------------------
# Window shifts
# ---------------------------------------------------------------------------


class TestShifts:
    def test_plus_o_examples(self):
        assert plus_o(iv("(1,2)"), rg("[3,3]")) == iv("(4,5)")
        assert plus_o(iv("[1,1]"), rg("(0,2)")) == iv("(1,3)")

    def test_minus_o_example(self):
        assert minus_o(iv("[5,5]"), rg("(1,2)")) == iv("(3,4)")

    def test_fits_examples(self):
        assert fits(rg("(1,2)"), iv("(0,5)"))
        assert not fits(rg("(1,4)"), iv("[0,2]"))
        assert fits(rg("[7,7]"), iv("[0,0]"))

    def test_plus_c_examples(self):
        assert plus_c(iv("(0,4)"), rg("(1,2)")) == iv("[2,5]")
        assert plus_c(iv("[0,10)"), rg("[2,2]")) == iv("[2,12)")

    def test_minus_c_unbounded(self):
        # the window (0,inf) against (0,inf) leaves exactly the closed tail
        assert minus_c(iv("(0,inf)"), rg("(0,inf)")) == iv("[0,inf)")

    def test_minus_c_undefined(self):
        assert minus_c(iv("[0,2]"), rg("(1,4)")) is None

    def test_unbounded_window_bounded_interval(self):
        # no single point keeps an unbounded forward window inside a
        # bounded-right interval, whatever the left end does
        assert minus_c(iv("(-inf,600]"), rg("(1,inf)")) is None
        assert plus_c(iv("(-inf,600]"), rg("(1,inf)")) == iv("(-inf,601]")
        assert plus_c(iv("[600,inf)"), rg("(1,inf)")) is None
        assert minus_c(iv("[600,inf)"), rg("(1,inf)")) == iv("[599,inf)")

    def test_shape_enforced(self):
        with pytest.raises(ValueError, match="normalize"):
            plus_o(iv("[0,1]"), rg("[0,2)"))

    def test_oracle_agreement_sample(self):
        # the acceptance suite runs the 10k-per-op version of this
        assert oracles.run_interval_oracle_trials(2026, 400, grid=False) == []
        assert oracles.run_interval_oracle_trials(2027, 400, grid=True) == []


# ---------------------------------------------------------------------------
# gcd
# ---------------------------------------------------------------------------


class TestGcd:
    def test_examples(self):
        assert gcd_dyadic([ZERO]) == tp("1")
        assert gcd_dyadic([tp("1.5"), tp("2")]) == tp("0.5")
        assert gcd_dyadic([tp("6"), tp("4")]) == tp("2")

    def test_single_values(self):
        assert gcd_dyadic([tp("3")]) == tp("3")
        assert gcd_dyadic([tp("0.25")]) == tp("0.25")

    def test_errors(self):
        with pytest.raises(ValueError):
            gcd_dyadic([])
        with pytest.raises(ValueError):
            gcd_dyadic([POS_INF])

    @given(st.lists(st.builds(TimePoint, st.integers(-4096, 4096), st.integers(0, 8)),
                    min_size=1, max_size=8))
    def test_against_fraction_oracle(self, points):
        got = gcd_dyadic(points)
        want = oracles.gcd_fractions([oracles.frac(p) for p in points])
        assert oracles.frac(got) == want

    @given(st.lists(st.builds(TimePoint, st.integers(-4096, 4096), st.integers(0, 8)),
                    min_size=1, max_size=8))
    def test_divides_all_and_maximal(self, points):
        d = gcd_dyadic(points)
        df = oracles.frac(d)
        assert df > 0
        for p in points:
            assert (oracles.frac(p) / df).denominator == 1
        if any(oracles.frac(p) != 0 for p in points):
            doubled = df * 2
            assert not all((oracles.frac(p) / doubled).denominator == 1 for p in points)


# ---------------------------------------------------------------------------
# Text round-trips
# ---------------------------------------------------------------------------


class TestText:
    def test_interval_round_trip(self):
        for text in ("[0,1]", "(0,1)", "[0,1)", "(0,1]", "(-inf,inf)", "(-inf,3]", "[2.5,inf)"):
            assert format_interval(parse_interval(text)) == text

    def test_clock_interval(self):
        i = parse_interval("[13:00:00,13:01:25)")
        assert i == iv("[46800,46885)")
        assert format_interval(i, clock=True) == "[13:00:00,13:01:25)"

    def test_units_in_intervals(self):
        assert parse_interval("(0,1m]") == iv("(0,60]")
        assert parse_range("[0s,30s]") == rg("[0,30]")

    def test_bad_intervals(self):
        for text in ("[2,1]", "[1,1)", "(5,5)", "0,1", "[a,b]"):
            with pytest.raises(ValueError):
                parse_interval(text)

    def test_bad_clock(self):
        with pytest.raises(ValueError):
            parse_point("13:61")
