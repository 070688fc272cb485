"""Static analysis of programs: the dependence relation between predicates,
recursion detection, rule depth, chase bounds, and the endpoint-offset sets
used to cross-check where derived interval endpoints may come from.

The endpoint machinery backs two executable invariants over a computed
model:

  * check_zones: every finite endpoint of a derived interval is a multiple
    of the gcd of all numbers in the program and data, and lies within
    [M_l, M_r] where M_l/M_r pad the data span by K * depth;
  * check_endpoint_provenance: every finite endpoint equals some data-fact
    endpoint plus an offset predicted for that predicate.

Both return lists of violation messages (empty means the invariant held),
so test harnesses can run them over every evaluation result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from dmtl.temporal import (
    Interval,
    TimePoint,
    ZERO,
    format_point,
    gcd_dyadic,
)
from dmtl.language.syntax import (
    AtomLit,
    BoxMinus,
    BoxPlus,
    DataInstance,
    Neq,
    Program,
    Rule,
    Since,
    Until,
    atoms_in,
)


# ---------------------------------------------------------------------------
# Dependence and depth
# ---------------------------------------------------------------------------


def dependence(program: Program) -> dict[str, set[str]]:
    """Edges head -> body predicates; body-only predicates map to set()."""
    edges: dict[str, set[str]] = {}
    for rule in program.rules:
        deps = edges.setdefault(rule.head.pred, set())
        for lit in rule.body:
            for atom in atoms_in(lit):
                deps.add(atom.pred)
                edges.setdefault(atom.pred, set())
    return edges


def is_nonrecursive(program: Program) -> bool:
    edges = dependence(program)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {p: WHITE for p in edges}
    for start in edges:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(edges[start]))]
        color[start] = GREY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GREY:
                    return False
                if color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, iter(edges[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return True


def depth(program: Program) -> dict[str, int]:
    """Longest dependence chain below each predicate; 0 for non-heads."""
    if not is_nonrecursive(program):
        raise ValueError("depth is undefined for recursive programs")
    edges = dependence(program)
    heads = {r.head.pred for r in program.rules}
    memo: dict[str, int] = {}

    def d(p: str) -> int:
        if p in memo:
            return memo[p]
        if p not in heads:
            memo[p] = 0
            return 0
        memo[p] = 1 + max((d(q) for q in edges[p]), default=0)
        return memo[p]

    for p in edges:
        d(p)
    return memo


def program_depth(program: Program) -> int:
    table = depth(program)
    return max(table.values(), default=0)


# ---------------------------------------------------------------------------
# Chase bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bounds:
    largest_number: TimePoint  # K
    depth: int
    m_left: TimePoint
    m_right: TimePoint
    divisor: TimePoint  # d, the gcd of all numbers in program and data


def program_numbers(program: Program) -> list[TimePoint]:
    """All finite range endpoints occurring anywhere in the program."""
    nums: list[TimePoint] = []

    def from_range(rng) -> None:
        for t in (rng.lo, rng.hi):
            if t.is_finite:
                nums.append(t)

    def walk(lit) -> None:
        if isinstance(lit, (AtomLit, Neq)):
            return
        if hasattr(lit, "rng"):
            from_range(lit.rng)
        for attr in ("sub", "left", "right"):
            child = getattr(lit, attr, None)
            if child is not None:
                walk(child)
        for part in getattr(lit, "parts", ()):
            walk(part)

    for rule in program.rules:
        for _, rng in rule.head_boxes:
            from_range(rng)
        for lit in rule.body:
            walk(lit)
    return nums


def data_numbers(data: DataInstance) -> list[TimePoint]:
    nums = []
    for fact in data:
        for t in (fact.interval.lo, fact.interval.hi):
            if t.is_finite:
                nums.append(t)
    return nums


def bounds(program: Program, data: DataInstance) -> Bounds:
    dnums = data_numbers(data)
    if not dnums:
        raise ValueError("data instance has no finite timestamps")
    pnums = program_numbers(program)
    k = max(pnums) if pnums else ZERO
    dep = program_depth(program)
    span = k * dep
    d = gcd_dyadic(pnums + dnums)
    return Bounds(
        largest_number=k,
        depth=dep,
        m_left=min(dnums) - span,
        m_right=max(dnums) + span,
        divisor=d,
    )


def _divisible(t: TimePoint, d: TimePoint) -> bool:
    exp = max(t.exp, d.exp)
    nt = t.num << (exp - t.exp)
    nd = d.num << (exp - d.exp)
    return nd != 0 and nt % nd == 0


def check_zones(
    facts: Iterable[tuple[str, Interval]], computed: Bounds
) -> list[str]:
    """Violations of the endpoint-grid bound over derived facts."""
    bad = []
    for pred, iv in facts:
        if pred == "TOP":
            continue
        for t in (iv.lo, iv.hi):
            if not t.is_finite:
                continue
            if not _divisible(t, computed.divisor):
                bad.append(
                    f"{pred}@{iv}: endpoint {format_point(t)} not a multiple "
                    f"of {format_point(computed.divisor)}"
                )
            if t < computed.m_left or t > computed.m_right:
                bad.append(
                    f"{pred}@{iv}: endpoint {format_point(t)} outside "
                    f"[{format_point(computed.m_left)},{format_point(computed.m_right)}]"
                )
    return bad


# ---------------------------------------------------------------------------
# Endpoint offsets (le / ri)
# ---------------------------------------------------------------------------


def le_ri(program: Program) -> dict[str, tuple[frozenset[TimePoint], frozenset[TimePoint]]]:
    """Per-predicate sets of offsets that can separate a derived interval
    endpoint from a data endpoint.  Defined on normal-form nonrecursive
    programs; left set applies to left endpoints, right set to right.

    The published offset table for SINCE/UNTIL rules misses the terms in
    which the companion operand's own endpoint survives the shift (for
    example, the left endpoint of P1 SINCE(r1,r2) P2 can be the left
    endpoint of P1 shifted by r1, or unshifted when the intersection is
    capped there).  Those closure terms are included here; the published
    cross terms are kept as well, so the result is a superset and the
    provenance check stays sound.
    """
    from dmtl.language.normalize import is_normal_form

    if not is_normal_form(program, require_shaped_ranges=False):
        raise ValueError("endpoint offsets require a normal-form program")
    if not is_nonrecursive(program):
        raise ValueError("endpoint offsets are undefined for recursive programs")
    heads = {r.head.pred for r in program.rules}
    memo: dict[str, tuple[frozenset[TimePoint], frozenset[TimePoint]]] = {}

    def shift(points: frozenset[TimePoint], r: TimePoint, sign: int) -> set[TimePoint]:
        if not r.is_finite:
            # an endpoint pushed to infinity never shows up as a finite one
            return set()
        delta = r if sign > 0 else -r
        return {p + delta for p in points if p.is_finite}

    def sets_for(pred: str) -> tuple[frozenset[TimePoint], frozenset[TimePoint]]:
        if pred in memo:
            return memo[pred]
        if pred not in heads:
            base = (frozenset([ZERO]), frozenset([ZERO]))
            memo[pred] = base
            return base
        le: set[TimePoint] = set()
        ri: set[TimePoint] = set()
        for rule in _rules_of(program, pred):
            single = rule.body[0] if len(rule.body) == 1 else None
            if isinstance(single, Since):
                le1, ri1 = sets_for(single.left.atom.pred)
                le2, ri2 = sets_for(single.right.atom.pred)
                r1, r2 = single.rng.lo, single.rng.hi
                le |= shift(le2, r1, +1) | ri1 | shift(le1, r1, +1) | le1
                ri |= shift(ri2, r2, +1) | ri1 | shift(ri1, r2, +1)
            elif isinstance(single, Until):
                le1, ri1 = sets_for(single.left.atom.pred)
                le2, ri2 = sets_for(single.right.atom.pred)
                r1, r2 = single.rng.lo, single.rng.hi
                le |= shift(le2, r2, -1) | le1 | shift(le1, r2, -1)
                ri |= shift(ri2, r1, -1) | le1 | shift(ri1, r1, -1) | ri1
            elif isinstance(single, BoxMinus):
                le1, ri1 = sets_for(single.sub.atom.pred)
                r1, r2 = single.rng.lo, single.rng.hi
                le |= shift(le1, r2, +1)
                ri |= shift(ri1, r1, +1)
            elif isinstance(single, BoxPlus):
                le1, ri1 = sets_for(single.sub.atom.pred)
                r1, r2 = single.rng.lo, single.rng.hi
                le |= shift(le1, r1, -1)
                ri |= shift(ri1, r2, -1)
            else:
                for lit in rule.body:
                    if isinstance(lit, AtomLit):
                        l, r = sets_for(lit.atom.pred)
                        le |= l
                        ri |= r
        result = (frozenset(le), frozenset(ri))
        memo[pred] = result
        return result

    out = {}
    for rule in program.rules:
        out[rule.head.pred] = sets_for(rule.head.pred)
        for lit in rule.body:
            for atom in atoms_in(lit):
                out[atom.pred] = sets_for(atom.pred)
    return out


def _rules_of(program: Program, pred: str) -> list[Rule]:
    return [r for r in program.rules if r.head.pred == pred]


def check_endpoint_provenance(
    facts: Iterable[tuple[str, Interval]],
    program: Program,
    data: DataInstance,
) -> list[str]:
    """Violations of the offset lemma: every finite endpoint of a derived
    fact must be a data endpoint plus a predicted offset.  Predicates with
    their own data facts additionally admit offset 0, since their input
    intervals reach the model unchanged.
    """
    offsets = le_ri(program)
    left_sources: set[TimePoint] = set()
    right_sources: set[TimePoint] = set()
    data_preds: set[str] = set()
    for fact in data:
        data_preds.add(fact.atom.pred)
        iv = fact.interval
        if iv.lo.is_finite:
            left_sources.add(iv.lo)
            if iv.lo_closed:
                right_sources.add(iv.lo)
        if iv.hi.is_finite:
            right_sources.add(iv.hi)
            if iv.hi_closed:
                left_sources.add(iv.hi)

    zero = frozenset([ZERO])
    bad = []
    for pred, iv in facts:
        if pred == "TOP":
            continue
        le, ri = offsets.get(pred, (zero, zero))
        if pred in data_preds:
            le = le | zero
            ri = ri | zero
        if iv.lo.is_finite and not any(iv.lo - n in left_sources for n in le):
            bad.append(f"{pred}@{iv}: left endpoint has no data origin")
        if iv.hi.is_finite and not any(iv.hi - n in right_sources for n in ri):
            bad.append(f"{pred}@{iv}: right endpoint has no data origin")
    return bad
