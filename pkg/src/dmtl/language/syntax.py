"""AST for programs, data instances and queries, plus validation and
rendering back to concrete text.

A rule is `head :- body.` where the head is an atom (or BOT) under zero or
more ALWAYS+/ALWAYS- prefixes and the body is a conjunction of literals.
Body literals may nest the six temporal operators, parenthesized
conjunctions, and inequalities between terms.  Diamond operators and
SINCE/UNTIL never appear in heads; that fragment is rejected outright
because query answering for it is undecidable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from dmtl.temporal import Interval, Range, format_interval


class ValidationError(ValueError):
    """A structurally well-formed parse that violates a language rule."""


# ---------------------------------------------------------------------------
# Terms and atoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    name: str
    is_var: bool

    @staticmethod
    def var(name: str) -> "Term":
        return Term(name, True)

    @staticmethod
    def const(name: str) -> "Term":
        return Term(name, False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return all(not t.is_var for t in self.args)

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(render_term(t) for t in self.args)})"


TOP = Atom("TOP")
BOT = Atom("BOT")


def is_special(pred: str) -> bool:
    return pred in ("TOP", "BOT")


# ---------------------------------------------------------------------------
# Body literals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomLit:
    atom: Atom


@dataclass(frozen=True)
class Neq:
    left: Term
    right: Term


@dataclass(frozen=True)
class BoxPlus:  # holds throughout the forward window
    rng: Range
    sub: "BodyLiteral"


@dataclass(frozen=True)
class BoxMinus:  # holds throughout the backward window
    rng: Range
    sub: "BodyLiteral"


@dataclass(frozen=True)
class DiamondPlus:  # holds somewhere in the forward window
    rng: Range
    sub: "BodyLiteral"


@dataclass(frozen=True)
class DiamondMinus:  # holds somewhere in the backward window
    rng: Range
    sub: "BodyLiteral"


@dataclass(frozen=True)
class Since:
    left: "BodyLiteral"
    rng: Range
    right: "BodyLiteral"


@dataclass(frozen=True)
class Until:
    left: "BodyLiteral"
    rng: Range
    right: "BodyLiteral"


@dataclass(frozen=True)
class Conj:
    parts: tuple["BodyLiteral", ...]


BodyLiteral = Union[AtomLit, Neq, BoxPlus, BoxMinus, DiamondPlus, DiamondMinus, Since, Until, Conj]

_UNARY = (BoxPlus, BoxMinus, DiamondPlus, DiamondMinus)
_BINARY = (Since, Until)


def atoms_in(lit: BodyLiteral) -> Iterator[Atom]:
    """All atoms inside a literal, any nesting depth."""
    if isinstance(lit, AtomLit):
        yield lit.atom
    elif isinstance(lit, Neq):
        return
    elif isinstance(lit, _UNARY):
        yield from atoms_in(lit.sub)
    elif isinstance(lit, _BINARY):
        yield from atoms_in(lit.left)
        yield from atoms_in(lit.right)
    elif isinstance(lit, Conj):
        for p in lit.parts:
            yield from atoms_in(p)
    else:  # pragma: no cover
        raise TypeError(f"not a body literal: {lit!r}")


def free_vars(lit: BodyLiteral) -> tuple[str, ...]:
    """Variables of a literal in order of first occurrence."""
    seen: dict[str, None] = {}

    def walk(l: BodyLiteral) -> None:
        if isinstance(l, AtomLit):
            for t in l.atom.args:
                if t.is_var:
                    seen.setdefault(t.name)
        elif isinstance(l, Neq):
            for t in (l.left, l.right):
                if t.is_var:
                    seen.setdefault(t.name)
        elif isinstance(l, _UNARY):
            walk(l.sub)
        elif isinstance(l, _BINARY):
            walk(l.left)
            walk(l.right)
        elif isinstance(l, Conj):
            for p in l.parts:
                walk(p)

    walk(lit)
    return tuple(seen)


def contains_neq(lit: BodyLiteral, nested: bool = False) -> bool:
    """True if an inequality occurs strictly below a temporal operator."""
    if isinstance(lit, Neq):
        return nested
    if isinstance(lit, _UNARY):
        return contains_neq(lit.sub, True)
    if isinstance(lit, _BINARY):
        return contains_neq(lit.left, True) or contains_neq(lit.right, True)
    if isinstance(lit, Conj):
        return any(contains_neq(p, nested) for p in lit.parts)
    return False


# ---------------------------------------------------------------------------
# Rules, programs, data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    head: Atom  # possibly BOT
    body: tuple[BodyLiteral, ...]
    # ALWAYS+/- prefixes on the head, outermost first; "+" or "-" per entry
    head_boxes: tuple[tuple[str, Range], ...] = ()

    def __str__(self) -> str:
        return render_rule(self)


class Program:
    """A validated rule set.

    Derived analyses (dependence graph, depth, nonrecursivity, endpoint
    offsets) live in dmtl.language.analysis and are computed on demand.
    """

    def __init__(self, rules: Iterable[Rule], check: bool = True):
        self.rules: tuple[Rule, ...] = tuple(rules)
        self.predicates: dict[str, int] = {}
        if check:
            self._validate()

    def _validate(self) -> None:
        arity: dict[str, int] = {}

        def see(atom: Atom, where: str) -> None:
            if atom.pred == "TOP":
                if atom.args:
                    raise ValidationError("TOP takes no arguments")
                return
            if atom.pred == "BOT":
                raise ValidationError(f"BOT cannot occur {where}")
            known = arity.get(atom.pred)
            if known is None:
                arity[atom.pred] = atom.arity
            elif known != atom.arity:
                raise ValidationError(
                    f"predicate {atom.pred} used with arity {atom.arity} and {known}"
                )

        for idx, rule in enumerate(self.rules):
            label = f"rule {idx + 1} ({render_rule(rule)})"
            if rule.head.pred == "TOP":
                raise ValidationError("TOP heads must be dropped before Program construction")
            if rule.head.pred == "BOT":
                if rule.head.args or rule.head_boxes:
                    raise ValidationError(f"{label}: BOT head takes no arguments or prefixes")
            else:
                see(rule.head, "in a head")
            if not rule.body:
                raise ValidationError(f"{label}: empty body")
            if not any(True for lit in rule.body for _ in atoms_in(lit)):
                raise ValidationError(f"{label}: rule body contains no atom")
            bound: set[str] = set()
            for lit in rule.body:
                if contains_neq(lit):
                    raise ValidationError(
                        f"{label}: inequality under a temporal operator is not supported "
                        "(inequalities are timeless side conditions)"
                    )
                for atom in atoms_in(lit):
                    see(atom, "in a body")
                    for t in atom.args:
                        if t.is_var:
                            bound.add(t.name)
            for t in rule.head.args:
                if t.is_var and t.name not in bound:
                    raise ValidationError(
                        f"{label}: head variable {t.name} does not occur in the body"
                    )
            for lit in self._all_neqs(rule.body):
                for t in (lit.left, lit.right):
                    if t.is_var and t.name not in bound:
                        raise ValidationError(
                            f"{label}: variable {t.name} occurs only in an inequality"
                        )
        self.predicates = arity

    @staticmethod
    def _all_neqs(body: tuple[BodyLiteral, ...]) -> Iterator[Neq]:
        stack = list(body)
        while stack:
            lit = stack.pop()
            if isinstance(lit, Neq):
                yield lit
            elif isinstance(lit, Conj):
                stack.extend(lit.parts)

    def rules_for(self, pred: str) -> list[Rule]:
        return [r for r in self.rules if r.head.pred == pred]

    def __str__(self) -> str:
        return "".join(render_rule(r) + "\n" for r in self.rules)

    def __eq__(self, other) -> bool:
        return isinstance(other, Program) and self.rules == other.rules


@dataclass(frozen=True)
class Fact:
    atom: Atom
    interval: Interval

    def __str__(self) -> str:
        # facts live in data files, where bare identifiers are constants
        return f"{render_atom(self.atom, data_mode=True)}@{format_interval(self.interval)}."


class DataInstance:
    """A finite set of ground facts P(c)@interval."""

    def __init__(self, facts: Iterable[Fact], clock_style: bool = False):
        self.facts: list[Fact] = list(facts)
        # clock_style records whether the source text wrote clock literals;
        # the answer printer follows the input style by default
        self.clock_style = clock_style
        for f in self.facts:
            if f.atom.pred == "BOT":
                raise ValidationError("BOT facts are not allowed in data")
            if f.atom.pred == "TOP":
                raise ValidationError("TOP facts are implicit; do not assert them")
            if not f.atom.is_ground():
                raise ValidationError(f"non-ground fact {f.atom}")

    def check_against(self, program: Program) -> None:
        for f in self.facts:
            known = program.predicates.get(f.atom.pred)
            if known is not None and known != f.atom.arity:
                raise ValidationError(
                    f"fact {f.atom} has arity {f.atom.arity}, program uses {known}"
                )

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.facts)

    def __str__(self) -> str:
        return "".join(str(f) + "\n" for f in self.facts)


@dataclass(frozen=True)
class Query:
    goal: Atom


# ---------------------------------------------------------------------------
# Rendering back to source text
# ---------------------------------------------------------------------------

_BARE_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z|\d+(\.\d+)?\Z")


def render_term(t: Term, data_mode: bool = False) -> str:
    if t.is_var:
        return t.name
    name = t.name
    if data_mode:
        # in fact files every bare identifier is a constant
        if _BARE_NAME.match(name):
            return name
        return f"'{name}'"
    # program text: lowercase-initial constants must be quoted so they do
    # not read back as variables
    if _BARE_NAME.match(name) and (name[0].isupper() or name[0].isdigit()):
        return name
    return f"'{name}'"


def render_atom(a: Atom, data_mode: bool = False) -> str:
    if not a.args:
        return a.pred
    inner = ",".join(render_term(t, data_mode) for t in a.args)
    return f"{a.pred}({inner})"


def _render_range(r: Range) -> str:
    return format_interval(r)


def render_literal(lit: BodyLiteral) -> str:
    if isinstance(lit, AtomLit):
        return render_atom(lit.atom)
    if isinstance(lit, Neq):
        return f"{render_term(lit.left)} != {render_term(lit.right)}"
    if isinstance(lit, BoxPlus):
        return f"ALWAYS+{_render_range(lit.rng)} {_render_operand(lit.sub)}"
    if isinstance(lit, BoxMinus):
        return f"ALWAYS-{_render_range(lit.rng)} {_render_operand(lit.sub)}"
    if isinstance(lit, DiamondPlus):
        return f"SOMETIME+{_render_range(lit.rng)} {_render_operand(lit.sub)}"
    if isinstance(lit, DiamondMinus):
        return f"SOMETIME-{_render_range(lit.rng)} {_render_operand(lit.sub)}"
    if isinstance(lit, Since):
        return (
            f"{_render_operand(lit.left)} SINCE{_render_range(lit.rng)} "
            f"{_render_operand(lit.right)}"
        )
    if isinstance(lit, Until):
        return (
            f"{_render_operand(lit.left)} UNTIL{_render_range(lit.rng)} "
            f"{_render_operand(lit.right)}"
        )
    if isinstance(lit, Conj):
        return "(" + ", ".join(render_literal(p) for p in lit.parts) + ")"
    raise TypeError(f"not a body literal: {lit!r}")


def _render_operand(lit: BodyLiteral) -> str:
    # operands of temporal operators need parentheses unless atomic
    if isinstance(lit, AtomLit):
        return render_atom(lit.atom)
    if isinstance(lit, Conj):
        return render_literal(lit)
    return "(" + render_literal(lit) + ")"


def render_rule(rule: Rule) -> str:
    head = render_atom(rule.head)
    for kind, rng in reversed(rule.head_boxes):
        word = "ALWAYS+" if kind == "+" else "ALWAYS-"
        head = f"{word}{_render_range(rng)} {head}"
    body = ", ".join(render_literal(l) for l in rule.body)
    return f"{head} :- {body}."
