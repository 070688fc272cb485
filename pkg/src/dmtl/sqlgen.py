"""Rewriting nonrecursive normal-form programs into SQL view stacks.

The generated plan mirrors the bottom-up evaluator: one view per predicate
(the UNION of one SELECT per rule), each wrapped in a coalescing view that
merges adjacent same-tuple intervals, and a final SELECT over the goal's
coalesced view.  Intervals travel as two numeric columns `ledge`/`redge`
holding exact seconds; the brackets are not stored.  Instead every plan
commits to one half-open convention - `[ledge,redge)` for carry-forward
mappings, `(ledge,redge]` for carry-back - and the generator proves, rule
by rule, that the interval arithmetic keeps every view inside that
convention.  Rules that would mix bracket shapes (general SINCE/UNTIL, or
ranges whose window operators flip an endpoint) are rejected with a hint
to use the native engine.

Unbounded interval ends are encoded as the sentinels +-2^53; anything at
magnitude 2^52 or above reads back as infinite.  Rigid facts (metadata
mappings) simply select the sentinels as their edges.

The expected program shape is `normalize(program, split_ranges=False)`:
head boxes compiled away and bodies flattened, but ranges left whole, so
a rule like `Y(v) :- ALWAYS-[0,24h] TempAbove24(v)` stays one view with
`ledge + 86400` arithmetic and a `redge - ledge >= 86400` fitting guard.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping as MappingT, Sequence

from dmtl.ingest import CARRY_BACK, CARRY_FORWARD
from dmtl.language import Program, Query, depth, dependence, is_nonrecursive, is_normal_form
from dmtl.language.normalize import split_range
from dmtl.language.syntax import (
    Atom,
    AtomLit,
    BoxMinus,
    BoxPlus,
    Neq,
    Rule,
    Since,
    Term,
    Until,
)
from dmtl.temporal import (
    Interval,
    NEG_INF,
    POS_INF,
    Range,
    TimePoint,
    format_interval,
    intersect,
    minus_c,
    minus_o,
    plus_c,
    plus_o,
    union_if_interval,
)


class RewriteError(ValueError):
    """The program, mappings or goal cannot be turned into a plan."""


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_NUMERIC_CONST = re.compile(r"\d+(\.\d+)?\Z")

#: unbounded interval ends in emitted SQL; |value| >= _INF_READ reads as infinite
INF_SENTINEL = 1 << 53
_INF_READ = 1 << 52

_VARIANTS = ("counting", "window")

# bracket pair (lo_closed, hi_closed) each convention keeps every view in
_SHAPES = {CARRY_FORWARD: (True, False), CARRY_BACK: (False, True)}


# ---------------------------------------------------------------------------
# Mappings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mapping:
    """One extensional predicate exposed by a SQL source query.

    `sql` must project the columns named by `attrs`, `ledge` and `redge`;
    several mappings for one predicate are UNION-ed.  `convention` says
    which end of [ledge, redge] the rows include.
    """

    predicate: str
    sql: str
    attrs: tuple[str, ...]
    ledge: str
    redge: str
    convention: str

    def __post_init__(self):
        if not re.match(r"[A-Z][A-Za-z0-9_]*\Z", self.predicate):
            raise RewriteError(f"bad mapping predicate name {self.predicate!r}")
        if self.predicate in ("TOP", "BOT"):
            raise RewriteError(f"{self.predicate} cannot be mapped")
        if not self.sql.strip():
            raise RewriteError(f"mapping for {self.predicate} has empty sql")
        for col in (*self.attrs, self.ledge, self.redge):
            if not _IDENT.match(col):
                raise RewriteError(f"mapping for {self.predicate}: bad column name {col!r}")
        cols = (*self.attrs, self.ledge, self.redge)
        if len(set(cols)) != len(cols):
            raise RewriteError(f"mapping for {self.predicate} repeats a column name")
        if self.convention not in _SHAPES:
            raise RewriteError(
                f"mapping for {self.predicate}: convention must be "
                f"{CARRY_FORWARD!r} or {CARRY_BACK!r}, got {self.convention!r}"
            )


def load_mappings(source) -> tuple[Mapping, ...]:
    """Mappings from a JSON file path, JSON text's parsed value, or one dict."""
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text(encoding="utf-8"))
    if isinstance(source, MappingT):
        source = [source]
    out = []
    for entry in source:
        try:
            attrs = entry["attrs"]
            if not isinstance(attrs, (list, tuple)):
                raise RewriteError(f"mapping field 'attrs' must be a list, got {attrs!r}")
            out.append(
                Mapping(
                    predicate=entry["predicate"],
                    sql=entry["sql"],
                    attrs=tuple(attrs),
                    ledge=entry["ledge"],
                    redge=entry["redge"],
                    convention=entry["convention"],
                )
            )
        except KeyError as e:
            raise RewriteError(f"mapping entry missing field {e.args[0]!r}") from None
    return tuple(out)


# ---------------------------------------------------------------------------
# Numbers and interval effects
# ---------------------------------------------------------------------------


def _tp_fraction(t: TimePoint) -> Fraction:
    return Fraction(t.num, 1 << t.exp)


def _sql_number(value: Fraction) -> str:
    """Exact decimal text: dyadic denominators expand to finite decimals."""
    if value.denominator == 1:
        return str(value.numerator)
    k = value.denominator.bit_length() - 1  # denominator is 2^k for dyadics
    scaled = value.numerator * 5**k
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def _shift_expr(column: str, delta: Fraction) -> str:
    if delta == 0:
        return column
    op = "+" if delta > 0 else "-"
    return f"{column} {op} {_sql_number(abs(delta))}"


def _box_image(iv: Interval, rng: Range, forward: bool) -> Interval | None:
    """The box-window result over a possibly unsplit range.

    A box over a union of ranges is the conjunction of the per-part boxes,
    so the image is the intersection of the shaped-part images.
    """
    result = None
    for part in split_range(rng):
        img = minus_c(iv, part) if forward else plus_c(iv, part)
        if img is None:
            return None
        result = img if result is None else intersect(result, img)
        if result is None:
            return None
    return result


def _diamond_image(iv: Interval, rng: Range, forward: bool) -> Interval | None:
    """The diamond-window result over a possibly unsplit range (a union)."""
    parts = [minus_o(iv, p) if forward else plus_o(iv, p) for p in split_range(rng)]
    result = parts[0]
    for img in parts[1:]:
        merged = union_if_interval(result, img)
        if merged is None:
            return None
        result = merged
    return result


class _Effect:
    """How one window operator moves a convention-shaped interval.

    Derived by running the real interval arithmetic on representative
    intervals of two different spans: the endpoint offsets must agree
    (the operators are translations) and the bracket shape must be
    span-independent.
    """

    def __init__(self, image, rng: Range, shape: tuple[bool, bool], context: str):
        if not rng.hi.is_finite:
            raise RewriteError(
                f"{context}: range {format_interval(rng)} is unbounded; "
                "the two-column interval model cannot carry it"
            )
        span = rng.hi * 4 + TimePoint(1 << 20)
        lo_closed, hi_closed = shape
        seen = []
        for width in (span, span * 2):
            rep = Interval(TimePoint(0), lo_closed, width, hi_closed)
            img = image(rep, rng)
            if img is None or not (img.lo.is_finite and img.hi.is_finite):
                raise RewriteError(
                    f"{context}: range {format_interval(rng)} empties or unbounds "
                    "every data interval"
                )
            seen.append(
                (
                    _tp_fraction(img.lo) - _tp_fraction(rep.lo),
                    _tp_fraction(img.hi) - _tp_fraction(rep.hi),
                    (img.lo_closed, img.hi_closed),
                )
            )
        if seen[0] != seen[1]:
            raise RewriteError(
                f"{context}: range {format_interval(rng)} moves interval ends "
                "non-uniformly; answer it with the native engine"
            )
        self.dl, self.dr, self.shape = seen[0]
        # input span must exceed this for the image to be nonempty
        self.guard_span = self.dl - self.dr


def _require_shape(effect: _Effect, shape: tuple[bool, bool], context: str) -> None:
    if effect.shape != shape:
        want = _shape_text(shape)
        got = _shape_text(effect.shape)
        raise RewriteError(
            f"{context}: result brackets {got} leave the plan's {want} "
            "convention; answer it with the native engine"
        )


def _shape_text(shape: tuple[bool, bool]) -> str:
    lo, hi = shape
    return ("[" if lo else "(") + "ledge,redge" + ("]" if hi else ")")


# ---------------------------------------------------------------------------
# SQL text helpers
# ---------------------------------------------------------------------------


def _const_sql(name: str) -> str:
    if _NUMERIC_CONST.match(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def _mx(exprs: Sequence[str]) -> str:
    """Latest of the given values, folded as binary CASE expressions."""
    if len(exprs) == 1:
        return exprs[0]
    rest = _mx(exprs[1:])
    return f"CASE WHEN {exprs[0]} >= {rest} THEN {exprs[0]} ELSE {rest} END"


def _mn(exprs: Sequence[str]) -> str:
    """Earliest of the given values, folded as binary CASE expressions."""
    if len(exprs) == 1:
        return exprs[0]
    rest = _mn(exprs[1:])
    return f"CASE WHEN {exprs[0]} <= {rest} THEN {exprs[0]} ELSE {rest} END"


def _attr(i: int) -> str:
    return f"attr_{i}"


def _view_name(pred: str) -> str:
    return f"V_{pred}"


def _star_name(pred: str) -> str:
    return f"V_{pred}_star"


def _term_positions(atom: Atom) -> tuple[dict[str, int], list[tuple[int, str]]]:
    """First position of each variable, and (position, name) of constants."""
    first: dict[str, int] = {}
    consts: list[tuple[int, str]] = []
    for i, term in enumerate(atom.args, start=1):
        if term.is_var:
            first.setdefault(term.name, i)
        else:
            consts.append((i, term.name))
    return first, consts


# ---------------------------------------------------------------------------
# Per-rule SELECT generation
# ---------------------------------------------------------------------------


def _head_columns(head: Atom, resolve) -> list[str]:
    """`expr AS attr_i` per head position; `resolve(var)` names a source column."""
    cols = []
    for i, term in enumerate(head.args, start=1):
        expr = _const_sql(term.name) if not term.is_var else resolve(term.name)
        cols.append(f"{expr} AS {_attr(i)}")
    return cols


def _single_source_conds(atom: Atom) -> list[str]:
    """Repeated-variable and constant conditions for an unaliased atom."""
    conds = []
    seen: dict[str, int] = {}
    for i, term in enumerate(atom.args, start=1):
        if not term.is_var:
            conds.append(f"{_attr(i)} = {_const_sql(term.name)}")
        elif term.name in seen:
            conds.append(f"{_attr(seen[term.name])} = {_attr(i)}")
        else:
            seen[term.name] = i
    return conds


def _window_select(
    rule: Rule, operand: Atom, source: str, effect: _Effect, require_nonempty: bool = False
) -> str:
    first, _ = _term_positions(operand)

    def resolve(var: str) -> str:
        if var not in first:
            raise RewriteError(f"head variable {var} unbound in rule '{rule}'")
        return _attr(first[var])

    cols = _head_columns(rule.head, resolve)
    cols.append(f"{_shift_expr('ledge', effect.dl)} AS ledge")
    cols.append(f"{_shift_expr('redge', effect.dr)} AS redge")
    conds = _single_source_conds(operand)
    if require_nonempty:
        # a diamond turns an empty (x,x] leftover row into a real interval;
        # boxes and joins cannot, their span guards already exclude it
        conds.append("ledge < redge")
    if effect.guard_span > 0:
        conds.append(f"redge - ledge >= {_sql_number(effect.guard_span)}")
    sql = f"SELECT {', '.join(cols)}\nFROM {source}"
    if conds:
        sql += f"\nWHERE {' AND '.join(conds)}"
    return sql


def _conjunction_select(rule: Rule, atoms: list[Atom], neqs: list[Neq], star) -> str:
    if len(atoms) == 1:
        # a plain copy: no join machinery, reference columns bare
        atom = atoms[0]
        first, _ = _term_positions(atom)

        def resolve_one(var: str) -> str:
            if var not in first:
                raise RewriteError(f"head variable {var} unbound in rule '{rule}'")
            return _attr(first[var])

        cols = _head_columns(rule.head, resolve_one)
        cols.append("ledge AS ledge")
        cols.append("redge AS redge")
        conds = _single_source_conds(atom)
        for neq in neqs:
            left = resolve_one(neq.left.name) if neq.left.is_var else _const_sql(neq.left.name)
            right = resolve_one(neq.right.name) if neq.right.is_var else _const_sql(neq.right.name)
            conds.append(f"{left} <> {right}")
        sql = f"SELECT {', '.join(cols)}\nFROM {star(atom.pred)}"
        if conds:
            sql += f"\nWHERE {' AND '.join(conds)}"
        return sql

    aliases = [f"T{k}" for k in range(1, len(atoms) + 1)]
    sources = [f"{star(a.pred)} AS {alias}" for a, alias in zip(atoms, aliases)]

    # every occurrence of every term, in body order
    occurrences: dict[str, list[str]] = {}
    const_conds: list[str] = []
    for atom, alias in zip(atoms, aliases):
        for i, term in enumerate(atom.args, start=1):
            ref = f"{alias}.{_attr(i)}"
            if term.is_var:
                occurrences.setdefault(term.name, []).append(ref)
            else:
                const_conds.append(f"{ref} = {_const_sql(term.name)}")

    def resolve(var: str) -> str:
        if var not in occurrences:
            raise RewriteError(f"head variable {var} unbound in rule '{rule}'")
        return occurrences[var][0]

    cols = _head_columns(rule.head, resolve)
    mx = _mx([f"{a}.ledge" for a in aliases])
    mn = _mn([f"{a}.redge" for a in aliases])
    cols.append(f"{mx} AS ledge")
    cols.append(f"{mn} AS redge")

    conds = []
    for refs in occurrences.values():
        for k in range(len(refs)):
            for j in range(k + 1, len(refs)):
                conds.append(f"{refs[k]} = {refs[j]}")
    conds.extend(const_conds)
    for neq in neqs:
        left = resolve(neq.left.name) if neq.left.is_var else _const_sql(neq.left.name)
        right = resolve(neq.right.name) if neq.right.is_var else _const_sql(neq.right.name)
        conds.append(f"{left} <> {right}")
    conds.append(f"{mx} < {mn}")
    return f"SELECT {', '.join(cols)}\nFROM {', '.join(sources)}\nWHERE {' AND '.join(conds)}"


def _rule_select(rule: Rule, shape: tuple[bool, bool], star) -> str | None:
    """One SELECT for one normal-form rule; None when the rule derives nothing."""
    body = rule.body
    single = body[0] if len(body) == 1 else None
    context = f"rule '{rule}'"

    if isinstance(single, (Since, Until)):
        left, right = single.left.atom, single.right.atom
        if left.pred != "TOP":
            raise RewriteError(
                f"{context}: SINCE/UNTIL with a non-TOP left operand produces "
                "row-dependent interval brackets; answer it with the native engine"
            )
        if right.pred == "TOP":
            raise RewriteError(f"{context}: the universal interval has no table form")
        if right.pred == "BOT":
            return None
        forward = isinstance(single, Until)
        effect = _Effect(
            lambda iv, rng: _diamond_image(iv, rng, forward), single.rng, shape, context
        )
        _require_shape(effect, shape, context)
        return _window_select(rule, right, star(right.pred), effect, require_nonempty=True)

    if isinstance(single, (BoxPlus, BoxMinus)):
        operand = single.sub.atom
        if operand.pred == "TOP":
            raise RewriteError(f"{context}: the universal interval has no table form")
        if operand.pred == "BOT":
            return None
        forward = isinstance(single, BoxPlus)
        effect = _Effect(
            lambda iv, rng: _box_image(iv, rng, forward), single.rng, shape, context
        )
        _require_shape(effect, shape, context)
        return _window_select(rule, operand, star(operand.pred), effect)

    atoms = [lit.atom for lit in body if isinstance(lit, AtomLit)]
    neqs = [lit for lit in body if isinstance(lit, Neq)]
    if any(a.pred == "BOT" for a in atoms):
        return None
    atoms = [a for a in atoms if a.pred != "TOP"]
    if not atoms:
        # all conjuncts were TOP: the head holds over the whole timeline
        cols = [f"{_const_sql(t.name)} AS {_attr(i)}" for i, t in enumerate(rule.head.args, 1)]
        cols.append(f"-{INF_SENTINEL} AS ledge")
        cols.append(f"{INF_SENTINEL} AS redge")
        return f"SELECT {', '.join(cols)}"
    return _conjunction_select(rule, atoms, neqs, star)


# ---------------------------------------------------------------------------
# Coalescing
# ---------------------------------------------------------------------------


def coalesce_sql(view_name: str, attrs: Sequence[str], variant: str = "counting") -> str:
    """A query computing the maximal intervals per constant tuple of a view.

    `counting` pairs coalesced left ends with coalesced right ends through
    correlated COUNT subqueries; `window` runs the partition-and-sort
    formulation over window functions.  Both treat touching half-open
    intervals as mergeable, which is sound for either edge convention.
    """
    if variant not in _VARIANTS:
        raise RewriteError(f"unknown coalescing variant {variant!r}")
    if variant == "counting":
        return _coalesce_counting(view_name, list(attrs))
    return _coalesce_window(view_name, list(attrs))


def _coalesce_counting(view_name: str, attrs: list[str]) -> str:
    def group(alias_a: str, alias_b: str) -> str:
        return "".join(f" AND {alias_a}.{c} = {alias_b}.{c}" for c in attrs)

    def ends(edge: str, cmp: str) -> str:
        keep = ", ".join([f"T.{c} AS {c}" for c in attrs] + [f"T.{edge} AS {edge}"])
        return (
            f"SELECT {keep}\n"
            f"FROM {view_name} AS T\n"
            f"WHERE (SELECT COUNT(*) FROM {view_name} AS S"
            f" WHERE S.ledge {cmp} T.{edge}{group('S', 'T')})"
            f" = (SELECT COUNT(*) FROM {view_name} AS S"
            f" WHERE S.redge {cmp} T.{edge}{group('S', 'T')})"
        )

    vl = ends("ledge", ">=")
    vr = ends("redge", "<=")
    cols = ", ".join([f"Vl.{c} AS {c}" for c in attrs] + ["Vl.ledge AS ledge"])
    pairing = (
        f"(SELECT MIN(Vr.redge) FROM ({_indent(vr)}) AS Vr"
        f" WHERE Vr.redge >= Vl.ledge{group('Vr', 'Vl')}) AS redge"
    )
    return f"SELECT DISTINCT {cols}, {pairing}\nFROM ({_indent(vl)}) AS Vl"


def _coalesce_window(view_name: str, attrs: list[str]) -> str:
    partition = f"PARTITION BY {', '.join(attrs)} " if attrs else ""
    order = "ORDER BY ledge, redge"
    keep = "".join(f"{c}, " for c in attrs)
    boundary = (
        f"SELECT {keep}ledge, redge,"
        f" CASE WHEN ledge <= MAX(redge) OVER ({partition}{order}"
        f" ROWS BETWEEN UNBOUNDED PRECEDING AND 1 PRECEDING) THEN 0 ELSE 1 END AS boundary\n"
        f"FROM {view_name}"
    )
    runs = (
        f"SELECT {keep}ledge, redge,"
        f" SUM(boundary) OVER ({partition}{order}"
        f" ROWS UNBOUNDED PRECEDING) AS run\n"
        f"FROM ({_indent(boundary)}) AS edges"
    )
    group_by = ", ".join([*attrs, "run"])
    return (
        f"SELECT {keep}MIN(ledge) AS ledge, MAX(redge) AS redge\n"
        f"FROM ({_indent(runs)}) AS runs\n"
        f"GROUP BY {group_by}"
    )


def _indent(sql: str) -> str:
    return "\n".join("  " + line for line in sql.splitlines())


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SqlPlan:
    """Ordered view definitions plus the final SELECT, ready to execute."""

    goal: str
    columns: tuple[str, ...]
    views: tuple[tuple[str, str], ...]
    final_select: str
    convention: str

    def script(self) -> str:
        parts = [
            f"CREATE TEMPORARY TABLE {name} AS\n{sql};" for name, sql in self.views
        ]
        parts.append(f"{self.final_select};")
        return "\n\n".join(parts) + "\n"

    def sidecar(self) -> dict:
        return {
            "goal": self.goal,
            "columns": list(self.columns),
            "views": [name for name, _ in self.views],
            "final": self.final_select,
            "convention": self.convention,
        }

    def interval(self, ledge, redge) -> Interval | None:
        """An engine interval from one result row; None for an empty row."""
        lo = _read_edge(ledge)
        hi = _read_edge(redge)
        lo_closed, hi_closed = _SHAPES[self.convention]
        if lo is None:
            lo_tp, lo_closed = NEG_INF, False
        else:
            lo_tp = _fraction_tp(lo)
        if hi is None:
            hi_tp, hi_closed = POS_INF, False
        else:
            hi_tp = _fraction_tp(hi)
        if lo is not None and hi is not None and lo >= hi:
            return None
        return Interval(lo_tp, lo_closed, hi_tp, hi_closed)


def _read_edge(value) -> Fraction | None:
    fr = Fraction(value)
    if abs(fr) >= _INF_READ:
        return None
    return fr


def _fraction_tp(fr: Fraction) -> TimePoint:
    den = fr.denominator
    if den & (den - 1):
        raise RewriteError(f"non-dyadic time value {fr} in SQL output")
    exp = den.bit_length() - 1
    return TimePoint(fr.numerator, exp)


def execute_plan(plan: SqlPlan, connection) -> list[tuple[tuple[str, ...], Interval]]:
    """Run the plan on a DB-API connection holding the source tables.

    Views become temporary tables on the connection; the return value is
    the decoded final result, one (constants, interval) pair per row, with
    empty rows dropped.  Constants come back as strings, matching the
    engine's term names.
    """
    cur = connection.cursor()
    for name, sql in plan.views:
        cur.execute(f"CREATE TEMPORARY TABLE {name} AS\n{sql}")
    cur.execute(plan.final_select)
    out = []
    for row in cur.fetchall():
        *consts, ledge, redge = row
        iv = plan.interval(ledge, redge)
        if iv is not None:
            out.append((tuple(str(c) for c in consts), iv))
    return out


def write_plan(plan: SqlPlan, sql_path, sidecar_path=None) -> None:
    sql_path = Path(sql_path)
    if sidecar_path is None:
        sidecar_path = sql_path.with_suffix(".json")
    sql_path.write_text(plan.script(), encoding="utf-8")
    Path(sidecar_path).write_text(
        json.dumps(plan.sidecar(), indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# The rewriter
# ---------------------------------------------------------------------------


def rewrite(
    program: Program,
    mappings: Iterable[Mapping],
    query: Query,
    variant: str = "counting",
    coalesce_mapped: bool = True,
) -> SqlPlan:
    """Compile program + mappings + goal into an executable view stack.

    The program must be nonrecursive and in unsplit normal form
    (`normalize(p, split_ranges=False)`).  Every extensional predicate
    needs a mapping, and all mappings must share one edge convention.
    `coalesce_mapped=False` skips the coalescing views over mapped
    predicates; that is only sound when every mapping already emits
    coalesced rows, since the window operators read maximal intervals.
    """
    if variant not in _VARIANTS:
        raise RewriteError(f"unknown coalescing variant {variant!r}")
    mappings = tuple(mappings)
    if not is_nonrecursive(program):
        raise RewriteError("program is recursive; SQL rewriting needs a nonrecursive program")
    if not is_normal_form(program, require_shaped_ranges=False):
        raise RewriteError(
            "program is not in normal form; apply normalize(program, split_ranges=False) first"
        )

    conventions = {m.convention for m in mappings}
    if len(conventions) > 1:
        raise RewriteError(
            "mappings disagree on interval convention: " + ", ".join(sorted(conventions))
        )
    convention = conventions.pop() if conventions else CARRY_BACK
    shape = _SHAPES[convention]

    by_pred: dict[str, list[Mapping]] = {}
    for m in mappings:
        by_pred.setdefault(m.predicate, []).append(m)

    heads = {r.head.pred for r in program.rules}
    arities: dict[str, int] = {}
    for rule in program.rules:
        for atom in _rule_atoms(rule):
            arities.setdefault(atom.pred, atom.arity)
    goal = query.goal
    arities.setdefault(goal.pred, goal.arity)

    if goal.pred in ("TOP", "BOT"):
        raise RewriteError(f"{goal.pred} cannot be a goal")
    if goal.pred not in heads and goal.pred not in by_pred:
        raise RewriteError(f"goal predicate {goal.pred} is neither defined nor mapped")
    overlap = sorted(set(by_pred) & heads)
    if overlap:
        raise RewriteError(f"predicate {overlap[0]} is both mapped and defined by rules")
    for pred in sorted(set(arities) - heads - {"TOP", "BOT"}):
        if pred not in by_pred:
            raise RewriteError(f"extensional predicate {pred} has no mapping")
    for pred, ms in by_pred.items():
        for m in ms:
            if pred in arities and len(m.attrs) != arities[pred]:
                raise RewriteError(
                    f"mapping for {pred} binds {len(m.attrs)} attributes "
                    f"but the program uses arity {arities[pred]}"
                )
    # the goal's dependence cone, intensional predicates only
    edges = dependence(program)
    cone: set[str] = set()
    frontier = [goal.pred]
    while frontier:
        p = frontier.pop()
        if p in cone:
            continue
        cone.add(p)
        frontier.extend(edges.get(p, ()))
    depths = depth(program)
    intensional = sorted(cone & heads, key=lambda p: (depths[p], p))

    def star(pred: str) -> str:
        if pred in by_pred and not coalesce_mapped:
            return _view_name(pred)
        return _star_name(pred)

    views: list[tuple[str, str]] = []
    for pred in sorted(by_pred):
        branches = []
        for m in by_pred[pred]:
            source = m.sql.strip().rstrip(";")
            try:
                validate_sql(source)
            except RewriteError as e:
                raise RewriteError(f"mapping for {pred}: sql failed the grammar check: {e}") from None
            cols = [f"T1.{c} AS {_attr(i)}" for i, c in enumerate(m.attrs, start=1)]
            cols.append(f"T1.{m.ledge} AS ledge")
            cols.append(f"T1.{m.redge} AS redge")
            branches.append(f"SELECT {', '.join(cols)}\nFROM ({_indent(source)}) AS T1")
        views.append((_view_name(pred), "\nUNION\n".join(branches)))
        if coalesce_mapped:
            attr_names = [_attr(i) for i in range(1, len(by_pred[pred][0].attrs) + 1)]
            views.append((_star_name(pred), coalesce_sql(_view_name(pred), attr_names, variant)))

    rules_of: dict[str, list[Rule]] = {}
    for rule in program.rules:
        rules_of.setdefault(rule.head.pred, []).append(rule)
    for pred in intensional:
        branches = []
        for rule in rules_of[pred]:
            select = _rule_select(rule, shape, star)
            if select is not None:
                branches.append(select)
        if not branches:
            arity = arities.get(pred, 0)
            cols = [f"0 AS {_attr(i)}" for i in range(1, arity + 1)]
            cols += ["0 AS ledge", "0 AS redge"]
            branches.append(f"SELECT {', '.join(cols)}\nWHERE 1 = 0")
        views.append((_view_name(pred), "\nUNION\n".join(branches)))
        attr_names = [_attr(i) for i in range(1, arities.get(pred, 0) + 1)]
        views.append((_star_name(pred), coalesce_sql(_view_name(pred), attr_names, variant)))

    # final SELECT: name output columns after the goal's variables
    out_cols: list[str] = []
    conds: list[str] = []
    seen: dict[str, int] = {}
    for i, term in enumerate(goal.args, start=1):
        if not term.is_var:
            conds.append(f"{_attr(i)} = {_const_sql(term.name)}")
        elif term.name in seen:
            conds.append(f"{_attr(seen[term.name])} = {_attr(i)}")
        else:
            seen[term.name] = i
            out_cols.append(f"{_attr(i)} AS {term.name}")
    out_cols += ["ledge AS ledge", "redge AS redge"]
    conds.append("ledge < redge")  # drop rows the >= fitting guards let through empty
    final = (
        f"SELECT {', '.join(out_cols)}\nFROM {star(goal.pred)}\nWHERE {' AND '.join(conds)}"
    )

    plan = SqlPlan(
        goal=str(goal),
        columns=tuple([*seen, "ledge", "redge"]),
        views=tuple(views),
        final_select=final,
        convention=convention,
    )
    for name, sql in plan.views:
        _check_grammar(sql, f"view {name}")
    _check_grammar(plan.final_select, "final select")
    return plan


def _rule_atoms(rule: Rule):
    from dmtl.language.syntax import atoms_in

    yield rule.head
    for lit in rule.body:
        yield from atoms_in(lit)


def _check_grammar(sql: str, where: str) -> None:
    try:
        validate_sql(sql)
    except RewriteError as e:
        raise RewriteError(f"internal: {where} failed the grammar check: {e}") from None


# ---------------------------------------------------------------------------
# Grammar check for the emitted dialect subset
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s+|(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<str>'(?:[^']|'')*')|(?P<op><=|>=|<>|!=|[(),;.*=<>+\-/])"
)

_KEYWORDS = {
    "select", "distinct", "from", "where", "and", "or", "as", "union", "all",
    "case", "when", "then", "else", "end", "null", "group", "by", "order",
    "partition", "over", "rows", "between", "unbounded", "preceding",
    "following", "current", "row", "window", "create", "temporary", "table",
    "min", "max", "sum", "count", "asc", "desc", "not", "is",
}


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, str]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise RewriteError(f"bad SQL character {text[pos]!r} at offset {pos}")
            pos = m.end()
            if m.lastgroup is None:
                continue
            value = m.group()
            kind = m.lastgroup
            if kind == "name" and value.lower() in _KEYWORDS:
                kind, value = "kw", value.lower()
            self.items.append((kind, value))
        self.i = 0

    def peek(self, *want: str) -> bool:
        if self.i >= len(self.items):
            return False
        kind, value = self.items[self.i]
        return kind in want or (kind == "kw" and value in want) or (kind == "op" and value in want)

    def take(self, *want: str) -> str:
        if not self.peek(*want):
            got = self.items[self.i] if self.i < len(self.items) else ("eof", "")
            raise RewriteError(f"expected {' or '.join(want)}, got {got[1]!r}")
        _, value = self.items[self.i]
        self.i += 1
        return value

    def done(self) -> bool:
        return self.i >= len(self.items)


def validate_sql(text: str) -> None:
    """Parse one statement of the emitted subset; raise RewriteError if off."""
    toks = _Tokens(text)
    if toks.peek("create"):
        toks.take("create")
        toks.take("temporary")
        toks.take("table")
        toks.take("name")
        toks.take("as")
        _p_select(toks)
    else:
        _p_select(toks)
    if toks.peek(";"):
        toks.take(";")
    if not toks.done():
        raise RewriteError(f"trailing SQL tokens after statement: {toks.items[toks.i][1]!r}")


def _p_select(toks: _Tokens) -> None:
    _p_select_core(toks)
    while toks.peek("union"):
        toks.take("union")
        if toks.peek("all"):
            toks.take("all")
        _p_select_core(toks)


def _p_select_core(toks: _Tokens) -> None:
    toks.take("select")
    if toks.peek("distinct"):
        toks.take("distinct")
    _p_result(toks)
    while toks.peek(","):
        toks.take(",")
        _p_result(toks)
    if toks.peek("from"):
        toks.take("from")
        _p_source(toks)
        while toks.peek(","):
            toks.take(",")
            _p_source(toks)
    if toks.peek("where"):
        toks.take("where")
        _p_expr(toks)
    if toks.peek("window"):
        toks.take("window")
        toks.take("name")
        toks.take("as")
        toks.take("(")
        _p_window_spec(toks)
        toks.take(")")
    if toks.peek("group"):
        toks.take("group")
        toks.take("by")
        _p_expr(toks)
        while toks.peek(","):
            toks.take(",")
            _p_expr(toks)
    if toks.peek("order"):
        toks.take("order")
        toks.take("by")
        _p_order_item(toks)
        while toks.peek(","):
            toks.take(",")
            _p_order_item(toks)


def _p_result(toks: _Tokens) -> None:
    if toks.peek("*"):
        toks.take("*")
        return
    _p_expr(toks)
    if toks.peek("as"):
        toks.take("as")
        toks.take("name", "min", "max", "sum", "count", "row")
    elif toks.peek("name"):
        toks.take("name")


def _p_source(toks: _Tokens) -> None:
    if toks.peek("("):
        toks.take("(")
        _p_select(toks)
        toks.take(")")
    else:
        toks.take("name")
    if toks.peek("as"):
        toks.take("as")
        toks.take("name")
    elif toks.peek("name"):
        toks.take("name")


def _p_order_item(toks: _Tokens) -> None:
    _p_expr(toks)
    if toks.peek("asc", "desc"):
        toks.take("asc", "desc")


def _p_window_spec(toks: _Tokens) -> None:
    if toks.peek("partition"):
        toks.take("partition")
        toks.take("by")
        _p_expr(toks)
        while toks.peek(","):
            toks.take(",")
            _p_expr(toks)
    if toks.peek("order"):
        toks.take("order")
        toks.take("by")
        _p_order_item(toks)
        while toks.peek(","):
            toks.take(",")
            _p_order_item(toks)
    if toks.peek("rows"):
        toks.take("rows")
        if toks.peek("between"):
            toks.take("between")
            _p_frame_edge(toks)
            toks.take("and")
            _p_frame_edge(toks)
        else:
            _p_frame_edge(toks)


def _p_frame_edge(toks: _Tokens) -> None:
    if toks.peek("unbounded"):
        toks.take("unbounded")
        toks.take("preceding", "following")
    elif toks.peek("current"):
        toks.take("current")
        toks.take("row")
    else:
        toks.take("num")
        toks.take("preceding", "following")


def _p_expr(toks: _Tokens) -> None:
    _p_and(toks)
    while toks.peek("or"):
        toks.take("or")
        _p_and(toks)


def _p_and(toks: _Tokens) -> None:
    _p_cmp(toks)
    while toks.peek("and"):
        toks.take("and")
        _p_cmp(toks)


def _p_cmp(toks: _Tokens) -> None:
    _p_sum(toks)
    if toks.peek("=", "<>", "!=", "<=", ">=", "<", ">"):
        toks.take("=", "<>", "!=", "<=", ">=", "<", ">")
        _p_sum(toks)
    elif toks.peek("is"):
        toks.take("is")
        if toks.peek("not"):
            toks.take("not")
        toks.take("null")


def _p_sum(toks: _Tokens) -> None:
    _p_term(toks)
    while toks.peek("+", "-"):
        toks.take("+", "-")
        _p_term(toks)


def _p_term(toks: _Tokens) -> None:
    _p_factor(toks)
    while toks.peek("*", "/"):
        toks.take("*", "/")
        _p_factor(toks)


def _p_factor(toks: _Tokens) -> None:
    if toks.peek("-"):
        toks.take("-")
        _p_factor(toks)
        return
    if toks.peek("num"):
        toks.take("num")
        return
    if toks.peek("str"):
        toks.take("str")
        return
    if toks.peek("null"):
        toks.take("null")
        return
    if toks.peek("case"):
        toks.take("case")
        while toks.peek("when"):
            toks.take("when")
            _p_expr(toks)
            toks.take("then")
            _p_expr(toks)
        if toks.peek("else"):
            toks.take("else")
            _p_expr(toks)
        toks.take("end")
        return
    if toks.peek("("):
        toks.take("(")
        if toks.peek("select"):
            _p_select(toks)
        else:
            _p_expr(toks)
        toks.take(")")
        return
    toks.take("name", "min", "max", "sum", "count")
    if toks.peek("("):
        toks.take("(")
        if toks.peek("*"):
            toks.take("*")
        elif not toks.peek(")"):
            _p_expr(toks)
            while toks.peek(","):
                toks.take(",")
                _p_expr(toks)
        toks.take(")")
        if toks.peek("over"):
            toks.take("over")
            toks.take("(")
            if toks.peek("name"):
                toks.take("name")
            else:
                _p_window_spec(toks)
            toks.take(")")
        return
    # plain or qualified column reference
    if toks.peek("."):
        toks.take(".")
        toks.take("name")
