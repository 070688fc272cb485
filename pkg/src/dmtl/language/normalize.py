"""Rewriting arbitrary programs into the normal form the reasoner and the
SQL generator work on.

Normal-form rules come in three shapes:

  (2)  P(x) :- A1, ..., Ak, s1 != t1, ...          (plain conjunction; BOT ok)
  (3)  P(x) :- A1 SINCE<rng> A2                    (or UNTIL)
  (4)  P(x) :- ALWAYS+<rng> A1                     (or ALWAYS-)

where every Ai is an atom (TOP allowed) and every range is punctual [r,r]
or fully open (r1,r2).  The rewriting proceeds per rule:

  * SOMETIME- becomes TOP SINCE, SOMETIME+ becomes TOP UNTIL;
  * ALWAYS prefixes on the head are peeled outermost first, each peeling
    introducing a fresh predicate for the rule body and replacing the
    prefix with the matching TOP SINCE / TOP UNTIL body operator;
  * nested operands and conjunctions are lifted into fresh predicates
    carrying exactly their free variables;
  * half-closed and closed non-punctual ranges are split into punctual and
    open parts: SINCE/UNTIL rules are duplicated per part (the operator
    distributes over a union of ranges), ALWAYS rules become a conjunction
    of per-part fresh predicates.

Fresh predicates are named _nf0, _nf1, ... and the counter starts above
any such name already present, so normalizing twice is a no-op.
"""

from __future__ import annotations

import re

from dmtl.temporal import Range
from dmtl.language.syntax import (
    Atom,
    AtomLit,
    BodyLiteral,
    BoxMinus,
    BoxPlus,
    Conj,
    DiamondMinus,
    DiamondPlus,
    Neq,
    Program,
    Rule,
    Since,
    Term,
    Until,
    TOP,
    atoms_in,
    free_vars,
)

_FRESH_RE = re.compile(r"_nf(\d+)\Z")


class _FreshNames:
    def __init__(self, program: Program):
        n = 0
        for rule in program.rules:
            preds = [rule.head.pred]
            for lit in rule.body:
                preds.extend(a.pred for a in atoms_in(lit))
            for p in preds:
                m = _FRESH_RE.match(p)
                if m:
                    n = max(n, int(m.group(1)) + 1)
        self.n = n

    def new(self) -> str:
        name = f"_nf{self.n}"
        self.n += 1
        return name


def split_range(rng: Range) -> list[Range]:
    """Punctual and open pieces whose union is the given range."""
    if rng.shape_ok:
        return [rng]
    parts = []
    if rng.lo_closed:
        parts.append(Range(rng.lo, True, rng.lo, True))
    parts.append(Range(rng.lo, False, rng.hi, False))
    if rng.hi_closed:
        parts.append(Range(rng.hi, True, rng.hi, True))
    return parts


def _strip_diamonds(lit: BodyLiteral) -> BodyLiteral:
    if isinstance(lit, (AtomLit, Neq)):
        return lit
    if isinstance(lit, DiamondMinus):
        return Since(AtomLit(TOP), lit.rng, _strip_diamonds(lit.sub))
    if isinstance(lit, DiamondPlus):
        return Until(AtomLit(TOP), lit.rng, _strip_diamonds(lit.sub))
    if isinstance(lit, BoxPlus):
        return BoxPlus(lit.rng, _strip_diamonds(lit.sub))
    if isinstance(lit, BoxMinus):
        return BoxMinus(lit.rng, _strip_diamonds(lit.sub))
    if isinstance(lit, Since):
        return Since(_strip_diamonds(lit.left), lit.rng, _strip_diamonds(lit.right))
    if isinstance(lit, Until):
        return Until(_strip_diamonds(lit.left), lit.rng, _strip_diamonds(lit.right))
    if isinstance(lit, Conj):
        return Conj(tuple(_strip_diamonds(p) for p in lit.parts))
    raise TypeError(f"not a body literal: {lit!r}")


def _flatten(body) -> tuple[BodyLiteral, ...]:
    flat = []
    for lit in body:
        if isinstance(lit, Conj):
            flat.extend(_flatten(lit.parts))
        else:
            flat.append(lit)
    return tuple(flat)


def _atomify_literal(lit: BodyLiteral, out, fresh, split) -> Atom:
    atom = Atom(fresh.new(), tuple(Term.var(v) for v in free_vars(lit)))
    _normalize_plain(Rule(atom, (lit,)), out, fresh, split)
    return atom


def _atomify_operand(lit: BodyLiteral, out, fresh, split) -> Atom:
    if isinstance(lit, AtomLit):
        return lit.atom
    return _atomify_literal(lit, out, fresh, split)


def _normalize_plain(rule: Rule, out, fresh, split) -> None:
    """Normalize a rule whose head carries no ALWAYS prefixes."""
    flat = _flatten(rule.body)
    head_plain = rule.head.pred != "BOT"

    if head_plain and len(flat) == 1 and isinstance(flat[0], (Since, Until)):
        s = flat[0]
        left = _atomify_operand(s.left, out, fresh, split)
        right = _atomify_operand(s.right, out, fresh, split)
        parts = split_range(s.rng) if split else [s.rng]
        for part in parts:
            out.append(Rule(rule.head, (type(s)(AtomLit(left), part, AtomLit(right)),)))
        return

    if head_plain and len(flat) == 1 and isinstance(flat[0], (BoxPlus, BoxMinus)):
        b = flat[0]
        sub = _atomify_operand(b.sub, out, fresh, split)
        parts = split_range(b.rng) if split else [b.rng]
        if len(parts) == 1:
            out.append(Rule(rule.head, (type(b)(parts[0], AtomLit(sub)),)))
        else:
            # a box over a union of ranges is the conjunction of the boxes
            conj = []
            args = tuple(Term.var(v) for v in free_vars(AtomLit(sub)))
            for part in parts:
                c = Atom(fresh.new(), args)
                out.append(Rule(c, (type(b)(part, AtomLit(sub)),)))
                conj.append(AtomLit(c))
            out.append(Rule(rule.head, tuple(conj)))
        return

    new_body: list[BodyLiteral] = []
    for lit in flat:
        if isinstance(lit, (AtomLit, Neq)):
            new_body.append(lit)
        else:
            new_body.append(AtomLit(_atomify_literal(lit, out, fresh, split)))
    out.append(Rule(rule.head, tuple(new_body)))


def normalize(program: Program, split_ranges: bool = True) -> Program:
    fresh = _FreshNames(program)
    out: list[Rule] = []
    for rule in program.rules:
        cur_body = tuple(_strip_diamonds(l) for l in rule.body)
        boxes = list(rule.head_boxes)
        while boxes:
            kind, rng = boxes.pop(0)  # outermost prefix first
            q = Atom(fresh.new(), rule.head.args)
            _normalize_plain(Rule(q, cur_body), out, fresh, split_ranges)
            wrap = (
                Since(AtomLit(TOP), rng, AtomLit(q))
                if kind == "+"
                else Until(AtomLit(TOP), rng, AtomLit(q))
            )
            cur_body = (wrap,)
        _normalize_plain(Rule(rule.head, cur_body), out, fresh, split_ranges)
    return Program(out)


def is_normal_form(program: Program, require_shaped_ranges: bool = True) -> bool:
    for rule in program.rules:
        if rule.head_boxes:
            return False
        body = rule.body
        single = body[0] if len(body) == 1 else None
        if isinstance(single, (Since, Until)):
            if rule.head.pred == "BOT":
                return False
            if not (isinstance(single.left, AtomLit) and isinstance(single.right, AtomLit)):
                return False
            if require_shaped_ranges and not single.rng.shape_ok:
                return False
        elif isinstance(single, (BoxPlus, BoxMinus)):
            if rule.head.pred == "BOT":
                return False
            if not isinstance(single.sub, AtomLit):
                return False
            if require_shaped_ranges and not single.rng.shape_ok:
                return False
        else:
            for lit in body:
                if not isinstance(lit, (AtomLit, Neq)):
                    return False
    return True
