"""Bottom-up evaluation of normal-form programs over interval tables.

Two evaluators are provided.  eval_nonrecursive materialises predicates in
dependence order and is complete for nonrecursive programs; chase applies
all rules round by round and is the reference semantics, sound for any
program and complete whenever it reports a fixpoint.  Both work on
TemporalTable values: relations whose rows carry a constant tuple and a
time interval, kept sorted so that rows with equal tuples appear in the
strict interval order (the temporal ordering assumption, TOA below).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from heapq import merge as _heap_merge
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

from dmtl.temporal import (
    Interval,
    NEG_INF,
    POS_INF,
    Range,
    TimePoint,
    closure,
    intersect,
    interval_sort_key,
    minus_c,
    minus_o,
    plus_c,
    plus_o,
    union_if_interval,
)
from dmtl.language.syntax import (
    BOT,
    Atom,
    AtomLit,
    BodyLiteral,
    BoxMinus,
    BoxPlus,
    DataInstance,
    Fact,
    Neq,
    Program,
    Query,
    Rule,
    Since,
    Term,
    Until,
)
from dmtl.language.analysis import depth, is_nonrecursive
from dmtl.language.normalize import is_normal_form, normalize

FULL = Interval(NEG_INF, False, POS_INF, False)

Row = tuple[tuple[str, ...], Interval]


class TableIntegrityError(ValueError):
    """A table violated the sort or coalescing contract of an operation."""


def _row_key(row: Row):
    return (row[0], interval_sort_key(row[1]))


class TemporalTable:
    """An interval relation: attribute names plus (tuple, interval) rows.

    Rows are kept sorted by constant tuple and then by the interval order,
    which subsumes TOA.  Tables are immutable once built; pass
    presorted=True only when the rows are already in that order.

    The private flags record properties already established for this
    table (row order, disjoint runs) so the checks below are paid at
    most once per table; immutability keeps them valid.
    """

    __slots__ = ("attrs", "rows", "_toa_ok", "_disjoint_ok")

    def __init__(self, attrs: Sequence[str], rows: Iterable[Row], *, presorted: bool = False):
        self.attrs = tuple(attrs)
        rows = tuple(rows) if presorted else tuple(sorted(rows, key=_row_key))
        for tup, _ in rows:
            if len(tup) != len(self.attrs):
                raise TableIntegrityError(
                    f"row width {len(tup)} does not match {len(self.attrs)} attributes"
                )
        self.rows = rows
        self._toa_ok = not presorted
        self._disjoint_ok = False

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemporalTable):
            return NotImplemented
        return self.attrs == other.attrs and self.rows == other.rows

    def __repr__(self) -> str:
        return f"TemporalTable({self.attrs!r}, {len(self.rows)} rows)"

    @property
    def is_empty(self) -> bool:
        return not self.rows


def check_toa(table: TemporalTable) -> None:
    """Raise unless rows are (tuple, interval-order) nondecreasing."""
    if table._toa_ok:
        return
    rows = table.rows
    prev = _row_key(rows[0]) if rows else None
    for i in range(1, len(rows)):
        cur = _row_key(rows[i])
        if cur < prev:
            raise TableIntegrityError(f"rows {i - 1} and {i} out of order")
        prev = cur
    table._toa_ok = True


def _runs(rows: Sequence[Row]) -> Iterator[tuple[tuple[str, ...], list[Interval]]]:
    """Group sorted rows into (tuple, interval list) runs."""
    cur: Optional[tuple[str, ...]] = None
    ivs: list[Interval] = []
    for tup, iv in rows:
        if tup != cur:
            if cur is not None:
                yield cur, ivs
            cur, ivs = tup, []
        ivs.append(iv)
    if cur is not None:
        yield cur, ivs


# ---------------------------------------------------------------------------
# Table operations
# ---------------------------------------------------------------------------


def coalesce_table(table: TemporalTable) -> TemporalTable:
    """Merge rows with equal tuples whose intervals union to an interval.

    Single left-to-right pass per tuple group; the output has no two rows
    with the same tuple that intersect or touch without a gap.
    """
    check_toa(table)
    out: list[Row] = []
    for tup, ivs in _runs(table.rows):
        acc = ivs[0]
        for iv in ivs[1:]:
            merged = union_if_interval(acc, iv)
            if merged is not None:
                acc = merged
            else:
                out.append((tup, acc))
                acc = iv
        out.append((tup, acc))
    result = TemporalTable(table.attrs, out, presorted=True)
    result._toa_ok = True
    result._disjoint_ok = True
    return result


def check_disjoint_runs(table: TemporalTable) -> None:
    """Raise unless no two intervals of the same tuple share a point.

    Join merges interval runs with two pointers, which silently drops
    matches when a run contains overlapping intervals; coalesced tables
    satisfy this by construction.
    """
    if table._disjoint_ok:
        return
    for tup, ivs in _runs(table.rows):
        for i in range(1, len(ivs)):
            if intersect(ivs[i - 1], ivs[i]) is not None:
                raise TableIntegrityError(
                    f"overlapping intervals for {tup}; coalesce the table first"
                )
    table._disjoint_ok = True


def _ends_before(a: Interval, b: Interval) -> bool:
    """True when a's right endpoint comes strictly before b's."""
    if a.hi != b.hi:
        return a.hi < b.hi
    return b.hi_closed and not a.hi_closed


def _entirely_left(a: Interval, b: Interval) -> bool:
    """True when a lies left of b with no common point."""
    if a.hi < b.lo:
        return True
    if a.hi == b.lo:
        return not (a.hi_closed and b.lo_closed)
    return False


def _join_plan(
    a: TemporalTable, b: TemporalTable
) -> tuple[tuple[str, ...], list[int], list[int], list[int]]:
    """Shared attributes, their positions, and b's carried-over positions."""
    shared = [x for x in a.attrs if x in b.attrs]
    a_pos = [a.attrs.index(x) for x in shared]
    b_pos = [b.attrs.index(x) for x in shared]
    b_rest = [i for i, x in enumerate(b.attrs) if x not in a.attrs]
    out_attrs = a.attrs + tuple(b.attrs[i] for i in b_rest)
    return out_attrs, a_pos, b_pos, b_rest


def _partition(rows: Sequence[Row], key_pos: Sequence[int]):
    """Hash-partition sorted rows into join-key -> list of tuple runs."""
    part: dict[tuple[str, ...], list[tuple[tuple[str, ...], list[Interval]]]] = {}
    for tup, ivs in _runs(rows):
        part.setdefault(tuple(tup[i] for i in key_pos), []).append((tup, ivs))
    return part


def temporal_join(a: TemporalTable, b: TemporalTable) -> TemporalTable:
    """Natural join; the interval column of a matched pair is the
    intersection.  Interval lists of a matched tuple pair are merged with
    two pointers, so no quadratic interval scan occurs.  Inputs must be
    TOA-sorted and coalesced.
    """
    check_toa(a)
    check_toa(b)
    check_disjoint_runs(a)
    check_disjoint_runs(b)
    out_attrs, a_pos, b_pos, b_rest = _join_plan(a, b)
    b_part = _partition(b.rows, b_pos)
    out: list[Row] = []
    for tup_a, ivs_a in _runs(a.rows):
        key = tuple(tup_a[i] for i in a_pos)
        for tup_b, ivs_b in b_part.get(key, ()):
            joined = tup_a + tuple(tup_b[i] for i in b_rest)
            i = j = 0
            while i < len(ivs_a) and j < len(ivs_b):
                z = intersect(ivs_a[i], ivs_b[j])
                if z is not None:
                    out.append((joined, z))
                if _ends_before(ivs_a[i], ivs_b[j]):
                    i += 1
                else:
                    j += 1
    return TemporalTable(out_attrs, out)


def _regroup(
    rows: Sequence[Row],
    out_attrs: Sequence[str],
    fn: Callable[[tuple[str, ...]], tuple[str, ...]],
) -> TemporalTable:
    """Map each row tuple through fn and restore TOA by merging the
    per-source-tuple runs, which stay individually ordered.
    """
    groups: dict[tuple[str, ...], list[list[Interval]]] = {}
    for tup, ivs in _runs(rows):
        groups.setdefault(fn(tup), []).append(ivs)
    out: list[Row] = []
    for tup in sorted(groups):
        for iv in _heap_merge(*groups[tup], key=interval_sort_key):
            out.append((tup, iv))
    result = TemporalTable(out_attrs, out, presorted=True)
    result._toa_ok = True
    return result


def project(table: TemporalTable, attrs: Sequence[str]) -> TemporalTable:
    """Column selection; TOA is restored with an ordered k-way merge of the
    source runs rather than a full re-sort.
    """
    missing = [x for x in attrs if x not in table.attrs]
    if missing:
        raise TableIntegrityError(f"projection on unknown attributes {missing}")
    check_toa(table)
    pos = [table.attrs.index(x) for x in attrs]
    return _regroup(table.rows, attrs, lambda tup: tuple(tup[i] for i in pos))


def union_tables(a: TemporalTable, b: TemporalTable) -> TemporalTable:
    if a.attrs != b.attrs:
        raise TableIntegrityError(f"union schema mismatch: {a.attrs} vs {b.attrs}")
    check_toa(a)
    check_toa(b)
    rows = list(_heap_merge(a.rows, b.rows, key=_row_key))
    result = TemporalTable(a.attrs, rows, presorted=True)
    result._toa_ok = True
    return result


# ---------------------------------------------------------------------------
# Rule application
# ---------------------------------------------------------------------------

_TOP_TABLE = TemporalTable((), [((), FULL)], presorted=True)


def _pred_attrs(arity: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(arity))


def _empty_table(arity: int) -> TemporalTable:
    return TemporalTable(_pred_attrs(arity), [], presorted=True)


def _table_for_atom(atom: Atom, tables: Mapping[str, TemporalTable]) -> TemporalTable:
    """The atom's rows as a table whose attributes are its variables.

    Constant arguments and repeated variables act as selections; the
    remaining positions are projected out under the variable names.
    """
    if atom.pred == "TOP":
        return _TOP_TABLE
    base = tables.get(atom.pred)
    if base is None:
        base = _empty_table(len(atom.args))
    keep: list[int] = []
    names: list[str] = []
    first: dict[str, int] = {}
    checks: list[tuple[int, int]] = []
    consts: list[tuple[int, str]] = []
    for i, t in enumerate(atom.args):
        if not t.is_var:
            consts.append((i, t.name))
        elif t.name in first:
            checks.append((i, first[t.name]))
        else:
            first[t.name] = i
            keep.append(i)
            names.append(t.name)
    if not consts and not checks:
        # distinct variables everywhere: the rows carry over unchanged
        renamed = TemporalTable(names, base.rows, presorted=True)
        renamed._toa_ok = base._toa_ok
        renamed._disjoint_ok = base._disjoint_ok
        return renamed
    rows = []
    for tup, iv in base.rows:
        if all(tup[i] == c for i, c in consts) and all(tup[i] == tup[j] for i, j in checks):
            rows.append((tuple(tup[i] for i in keep), iv))
    return TemporalTable(names, rows)


def _neq_ok(tup: tuple[str, ...], lit: Neq, attrs: tuple[str, ...]) -> bool:
    def val(t: Term) -> str:
        return tup[attrs.index(t.name)] if t.is_var else t.name

    return val(lit.left) != val(lit.right)


def _head_table(joined: TemporalTable, head: Atom) -> TemporalTable:
    """Project the joined body table onto the head argument list."""
    plan: list[tuple[bool, object]] = []
    for t in head.args:
        if t.is_var:
            plan.append((True, joined.attrs.index(t.name)))
        else:
            plan.append((False, t.name))
    def fn(tup: tuple[str, ...]) -> tuple[str, ...]:
        return tuple(tup[v] if is_var else v for is_var, v in plan)

    return _regroup(joined.rows, _pred_attrs(len(head.args)), fn)


def _operand_atom(lit: BodyLiteral) -> Atom:
    if not isinstance(lit, AtomLit):
        raise ValueError("rule is not in normal form: nested operand")
    return lit.atom


def _require_shaped(rng: Range) -> None:
    if not rng.shape_ok:
        raise ValueError("rule is not in normal form: range is neither punctual nor open")


def _apply_since_until(rule: Rule, tables: Mapping[str, TemporalTable]) -> TemporalTable:
    lit = rule.body[0]
    shift = plus_o if isinstance(lit, Since) else minus_o
    _require_shaped(lit.rng)
    t1 = _table_for_atom(_operand_atom(lit.left), tables)
    t2 = _table_for_atom(_operand_atom(lit.right), tables)
    out_attrs, pos1, pos2, rest2 = _join_plan(t1, t2)
    part2 = _partition(t2.rows, pos2)
    out: list[Row] = []
    for tup1, ivs1 in _runs(t1.rows):
        key = tuple(tup1[i] for i in pos1)
        for tup2, ivs2 in part2.get(key, ()):
            joined = tup1 + tuple(tup2[i] for i in rest2)
            j0 = 0
            for i1 in ivs1:
                c1 = closure(i1)
                while j0 < len(ivs2) and _entirely_left(ivs2[j0], c1):
                    j0 += 1
                j = j0
                while j < len(ivs2) and not _entirely_left(c1, ivs2[j]):
                    g = intersect(c1, ivs2[j])
                    if g is not None:
                        res = intersect(shift(g, lit.rng), c1)
                        if res is not None:
                            out.append((joined, res))
                    j += 1
    return _head_table(TemporalTable(out_attrs, out), rule.head)


def _apply_box(rule: Rule, tables: Mapping[str, TemporalTable]) -> TemporalTable:
    lit = rule.body[0]
    shift = plus_c if isinstance(lit, BoxMinus) else minus_c
    _require_shaped(lit.rng)
    src = _table_for_atom(_operand_atom(lit.sub), tables)
    out: list[Row] = []
    for tup, iv in src.rows:
        res = shift(iv, lit.rng)
        if res is not None:
            out.append((tup, res))
    return _head_table(TemporalTable(src.attrs, out), rule.head)


def _apply_horn(rule: Rule, tables: Mapping[str, TemporalTable]) -> TemporalTable:
    joined: Optional[TemporalTable] = None
    neqs: list[Neq] = []
    for lit in rule.body:
        if isinstance(lit, Neq):
            neqs.append(lit)
            continue
        if not isinstance(lit, AtomLit):
            raise ValueError("rule is not in normal form: temporal literal in a join body")
        t = _table_for_atom(lit.atom, tables)
        joined = t if joined is None else temporal_join(joined, t)
        if joined.is_empty:
            return _empty_table(len(rule.head.args))
    assert joined is not None  # validated rules have at least one atom
    if neqs and not joined.is_empty:
        rows = [
            (tup, iv)
            for tup, iv in joined.rows
            if all(_neq_ok(tup, n, joined.attrs) for n in neqs)
        ]
        joined = TemporalTable(joined.attrs, rows, presorted=True)
    return _head_table(joined, rule.head)


def apply_rule(rule: Rule, tables: Mapping[str, TemporalTable]) -> TemporalTable:
    """All firings of one normal-form rule against the given tables."""
    if rule.head_boxes:
        raise ValueError("rule is not in normal form: head has a temporal prefix")
    body = rule.body
    if len(body) == 1 and isinstance(body[0], (Since, Until)):
        return _apply_since_until(rule, tables)
    if len(body) == 1 and isinstance(body[0], (BoxPlus, BoxMinus)):
        return _apply_box(rule, tables)
    return _apply_horn(rule, tables)


# ---------------------------------------------------------------------------
# Models and evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalStatus:
    kind: str  # "fixpoint" | "cap_reached" | "inconsistent"
    rounds: int = 0

    @property
    def complete(self) -> bool:
        return self.kind != "cap_reached"


class CanonicalModel:
    """Coalesced per-predicate tables, plus an inconsistency witness when
    some falsum rule fired.
    """

    __slots__ = ("tables", "witness", "predicates")

    def __init__(
        self,
        tables: Mapping[str, TemporalTable],
        witness: Optional[Interval],
        predicates: Mapping[str, int],
    ):
        # empty tables carry no information; dropping them here keeps the
        # two evaluators' models comparable field by field
        self.tables = {p: t for p, t in tables.items() if t.rows}
        self.witness = witness
        self.predicates = dict(predicates)

    @property
    def inconsistent(self) -> bool:
        return self.witness is not None

    def table(self, pred: str) -> TemporalTable:
        if pred not in self.predicates:
            raise ValueError(f"unknown predicate {pred}")
        t = self.tables.get(pred)
        return t if t is not None else _empty_table(self.predicates[pred])


def _universe(program: Program, data: DataInstance) -> dict[str, int]:
    preds = dict(program.predicates)
    if any(rule.head.pred == "BOT" for rule in program.rules):
        preds["BOT"] = 0
    for fact in data:
        preds.setdefault(fact.atom.pred, len(fact.atom.args))
    preds.pop("TOP", None)
    return preds


def _seed_tables(data: DataInstance) -> dict[str, TemporalTable]:
    grouped: dict[str, list[Row]] = {}
    for fact in data:
        tup = tuple(t.name for t in fact.atom.args)
        grouped.setdefault(fact.atom.pred, []).append((tup, fact.interval))
    return {
        pred: coalesce_table(TemporalTable(_pred_attrs(len(rows[0][0])), rows))
        for pred, rows in grouped.items()
    }


def _require_normal(program: Program) -> None:
    if not is_normal_form(program):
        raise ValueError("evaluation requires a normal-form program; call normalize first")


def _map_maybe_parallel(fn, items: Sequence, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def eval_nonrecursive(
    program: Program, data: DataInstance, *, threads: int = 1
) -> CanonicalModel:
    """Materialise predicates in dependence order; complete for
    nonrecursive normal-form programs.  Falsum short-circuits: once it
    fires, later strata are not computed.
    """
    _require_normal(program)
    if not is_nonrecursive(program):
        raise ValueError("program is recursive; use chase")
    data.check_against(program)
    depths = depth(program)
    universe = _universe(program, data)
    order = sorted(universe, key=lambda p: (depths.get(p, 0), p))
    tables = _seed_tables(data)
    witness: Optional[Interval] = None

    def eval_pred(pred: str) -> TemporalTable:
        parts = [tables[pred]] if pred in tables else []
        for rule in program.rules_for(pred):
            parts.append(apply_rule(rule, tables))
        if not parts:
            return _empty_table(universe[pred])
        acc = parts[0]
        for t in parts[1:]:
            acc = union_tables(acc, t)
        return coalesce_table(acc)

    level_start = 0
    while level_start < len(order) and witness is None:
        d = depths.get(order[level_start], 0)
        level_end = level_start
        while level_end < len(order) and depths.get(order[level_end], 0) == d:
            level_end += 1
        level = order[level_start:level_end]
        results = _map_maybe_parallel(eval_pred, level, threads)
        for pred, table in zip(level, results):
            tables[pred] = table
            if pred == "BOT" and not table.is_empty:
                witness = table.rows[0][1]
        level_start = level_end
    return CanonicalModel(tables, witness, universe)


def default_round_cap(program: Program, data: DataInstance) -> int:
    return 10 * (len(program.rules) + len(data))


def chase(
    program: Program,
    data: DataInstance,
    round_cap: int,
    *,
    threads: int = 1,
) -> tuple[CanonicalModel, EvalStatus]:
    """Round-based reference evaluation.  Every round applies all rules to
    the tables of the previous round and coalesces; stops at a fixpoint,
    on falsum, or when the round cap is hit (a status, not an error).
    """
    _require_normal(program)
    data.check_against(program)
    universe = _universe(program, data)
    tables = _seed_tables(data)
    rules = program.rules

    for rnd in range(1, round_cap + 1):
        outputs = _map_maybe_parallel(lambda r: apply_rule(r, tables), rules, threads)
        bot: Optional[TemporalTable] = None
        fresh: dict[str, list[TemporalTable]] = {}
        for rule, out in zip(rules, outputs):
            if out.is_empty:
                continue
            if rule.head.pred == "BOT":
                bot = out if bot is None else union_tables(bot, out)
            else:
                fresh.setdefault(rule.head.pred, []).append(out)
        if bot is not None:
            tables["BOT"] = coalesce_table(bot)
            witness = tables["BOT"].rows[0][1]
            return CanonicalModel(tables, witness, universe), EvalStatus("inconsistent", rnd)
        changed = False
        for pred, parts in fresh.items():
            acc = tables.get(pred, _empty_table(universe[pred]))
            for t in parts:
                acc = union_tables(acc, t)
            acc = coalesce_table(acc)
            if pred not in tables or acc.rows != tables[pred].rows:
                changed = True
            tables[pred] = acc
        if not changed:
            return CanonicalModel(tables, None, universe), EvalStatus("fixpoint", rnd)
    return CanonicalModel(tables, None, universe), EvalStatus("cap_reached", round_cap)


# ---------------------------------------------------------------------------
# Answers
# ---------------------------------------------------------------------------


def _goal_tuple(query: Query, constants: Sequence[str]) -> tuple[str, ...]:
    """Instantiate the goal's variables, in first-occurrence order, with
    the given constants; constant arguments stay as written.
    """
    assign: dict[str, str] = {}
    it = iter(constants)
    out: list[str] = []
    for t in query.goal.args:
        if not t.is_var:
            out.append(t.name)
        elif t.name in assign:
            out.append(assign[t.name])
        else:
            try:
                assign[t.name] = next(it)
            except StopIteration:
                raise ValueError("not enough constants for the query variables") from None
            out.append(assign[t.name])
    if next(it, None) is not None:
        raise ValueError("too many constants for the query variables")
    return tuple(out)


def _matches_goal(tup: tuple[str, ...], query: Query) -> bool:
    seen: dict[str, str] = {}
    for t, c in zip(query.goal.args, tup):
        if not t.is_var:
            if t.name != c:
                return False
        elif seen.setdefault(t.name, c) != c:
            return False
    return True


def certain_answer(
    model: CanonicalModel, query: Query, constants: Sequence[str], iv: Interval
) -> bool:
    """True iff the model is inconsistent, or the instantiated goal holds
    throughout iv (iv lies inside one maximal interval of the goal tuple).
    """
    if model.inconsistent:
        return True
    table = model.table(query.goal.pred)
    tup = _goal_tuple(query, constants)
    for row_tup, row_iv in table.rows:
        if row_tup == tup and intersect(iv, row_iv) == iv:
            return True
    return False


def answers(model: CanonicalModel, query: Query) -> list[Row]:
    """All (tuple, maximal interval) rows matching the goal, sorted by
    tuple and then interval order.
    """
    table = model.table(query.goal.pred)
    return [row for row in table.rows if _matches_goal(row[0], query)]


# ---------------------------------------------------------------------------
# Certain answers via the inconsistency reduction
# ---------------------------------------------------------------------------


def _halve(t: TimePoint) -> TimePoint:
    return TimePoint(t.num, t.exp + 1)


def _probe_point(iv: Interval) -> TimePoint:
    """A dyadic point strictly inside iv (iv.lo for the punctual case)."""
    if iv.punctual:
        return iv.lo
    if iv.lo.is_finite and iv.hi.is_finite:
        return _halve(iv.lo + iv.hi)
    if iv.lo.is_finite:
        return iv.lo + TimePoint(1)
    if iv.hi.is_finite:
        return iv.hi - TimePoint(1)
    return TimePoint(0)


def _fresh_pred(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    n = 0
    while name in taken:
        n += 1
        name = f"{base}{n}"
    return name


def answer_via_reduction(
    program: Program,
    data: DataInstance,
    query: Query,
    constants: Sequence[str],
    iv: Interval,
    *,
    threads: int = 1,
) -> bool:
    """Decide a certain answer by consistency checking: mark a probe point
    s inside iv with a fresh fact, and add a falsum rule that fires iff
    the goal holds on all of iv around s (a backward box covers [lo, s],
    a forward box covers (s, hi]).  The answer holds iff the augmented
    program is inconsistent with the augmented data.
    """
    goal = query.goal
    if goal.pred in ("TOP", "BOT"):
        raise ValueError("query must target a user predicate")
    s = _probe_point(iv)
    probe = _fresh_pred("Probe", set(program.predicates) | {f.atom.pred for f in data})
    zero = TimePoint(0)
    body: list[BodyLiteral] = [AtomLit(Atom(probe, goal.args))]
    if iv.punctual:
        body.append(BoxMinus(Range(zero, True, zero, True), AtomLit(goal)))
    else:
        if iv.lo.is_finite:
            back = Range(zero, True, s - iv.lo, iv.lo_closed)
        else:
            back = Range(zero, True, POS_INF, False)
        if iv.hi.is_finite:
            forth = Range(zero, False, iv.hi - s, iv.hi_closed)
        else:
            forth = Range(zero, False, POS_INF, False)
        body.append(BoxMinus(back, AtomLit(goal)))
        body.append(BoxPlus(forth, AtomLit(goal)))
    augmented = Program(program.rules + (Rule(BOT, tuple(body)),))
    tup = _goal_tuple(query, constants)
    probe_fact = Fact(
        Atom(probe, tuple(Term.const(c) for c in tup)),
        Interval(s, True, s, True),
    )
    data2 = DataInstance(tuple(data.facts) + (probe_fact,))
    norm = normalize(augmented)
    if not is_nonrecursive(norm):
        raise ValueError("reduction requires a nonrecursive program")
    model = eval_nonrecursive(norm, data2, threads=threads)
    return model.inconsistent
