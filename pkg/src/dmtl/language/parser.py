"""Concrete syntax for rule files (.dmtl), fact files (.dfacts) and queries.

Rule files:

    NormalRestart(v) :- NormalStart(v), SOMETIME-(0,1h] NormalStop(v).
    ALWAYS+[0,24h] Hot(v) :- Warm(v).         % box-prefixed head
    BOT :- P(v), Q(v).                        % integrity constraint

Fact files:

    ActivePowerAbove15(tb0)@[13:00:00,13:00:15).
    Turbine(tb0)@(-inf,inf).

Inside fact files every bare identifier is a constant; inside rule files
lowercase-initial identifiers are variables and constants must start with
an uppercase letter or a digit, or be quoted.  Time points accept unit
suffixes (s, m, h, d), HH:MM[:SS] clock sugar, and inf/-inf.
"""

from __future__ import annotations

import re

from dmtl.temporal import Interval, Range, parse_point
from dmtl.language.syntax import (
    Atom,
    AtomLit,
    BodyLiteral,
    BoxMinus,
    BoxPlus,
    Conj,
    DataInstance,
    DiamondMinus,
    DiamondPlus,
    Fact,
    Neq,
    Program,
    Query,
    Rule,
    Since,
    Term,
    Until,
    TOP,
    BOT,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)


_TOKEN_RE = re.compile(
    r"""
      (?P<WS>\s+)
    | (?P<COMMENT>%[^\n]*)
    | (?P<ARROW>:-)
    | (?P<NEQ>!=)
    | (?P<CLOCK>\d{1,2}:\d{2}(?::\d{2})?)
    | (?P<NUMBER>\d+(?:\.\d+)?[smhd]?)
    | (?P<ALWAYSP>ALWAYS\+)
    | (?P<ALWAYSM>ALWAYS-)
    | (?P<SOMETIMEP>SOMETIME\+)
    | (?P<SOMETIMEM>SOMETIME-)
    | (?P<SINCE>SINCE(?![A-Za-z0-9_]))
    | (?P<UNTIL>UNTIL(?![A-Za-z0-9_]))
    | (?P<TOPKW>TOP(?![A-Za-z0-9_]))
    | (?P<BOTKW>BOT(?![A-Za-z0-9_]))
    | (?P<UNAME>[A-Z][A-Za-z0-9_]*)
    | (?P<LNAME>[a-z][A-Za-z0-9_]*)
    | (?P<FRESH>_[A-Za-z0-9_]*)
    | (?P<STRING>'[^'\n]*'|"[^"\n]*")
    | (?P<AT>@)
    | (?P<DOT>\.)
    | (?P<COMMA>,)
    | (?P<LPAR>\()
    | (?P<RPAR>\))
    | (?P<LBRK>\[)
    | (?P<RBRK>\])
    | (?P<PLUS>\+)
    | (?P<MINUS>-)
    """,
    re.VERBOSE,
)

_SKIP = ("WS", "COMMENT")


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind: str, text: str, offset: int):
        self.kind = kind
        self.text = text
        self.offset = offset

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r})"


def _lex(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind not in _SKIP:
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("EOF", "", n))
    return tokens


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    last_nl = text.rfind("\n", 0, offset)
    return line, offset - last_nl


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0
        self.saw_clock = False

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, kind: str) -> _Token | None:
        if self.tokens[self.pos].kind == kind:
            return self.next()
        return None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != kind:
            self.fail(f"expected {what}, found {tok.text!r}" if tok.text else f"expected {what} at end of input", tok)
        return self.next()

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        line, col = _line_col(self.text, tok.offset)
        raise ParseError(message, line, col)

    # -- shared pieces -----------------------------------------------------

    def endpoint(self) -> str:
        sign = ""
        if self.accept("PLUS"):
            pass
        elif self.accept("MINUS"):
            sign = "-"
        tok = self.peek()
        if tok.kind in ("NUMBER", "CLOCK") or (tok.kind == "LNAME" and tok.text == "inf"):
            self.next()
            if tok.kind == "CLOCK":
                self.saw_clock = True
            return sign + tok.text
        self.fail(f"expected a time point, found {tok.text!r}")

    def bracketed(self, make) -> Interval:
        open_tok = self.next()
        if open_tok.kind == "LBRK":
            lo_closed = True
        elif open_tok.kind == "LPAR":
            lo_closed = False
        else:
            self.fail("expected '[' or '('", open_tok)
        lo_text = self.endpoint()
        self.expect("COMMA", "','")
        hi_text = self.endpoint()
        close_tok = self.next()
        if close_tok.kind == "RBRK":
            hi_closed = True
        elif close_tok.kind == "RPAR":
            hi_closed = False
        else:
            self.fail("expected ']' or ')'", close_tok)
        try:
            lo = parse_point(lo_text)
            hi = parse_point(hi_text)
            return make(lo, lo_closed, hi, hi_closed)
        except ValueError as e:
            line, col = _line_col(self.text, open_tok.offset)
            raise ParseError(str(e), line, col) from None

    def range_(self) -> Range:
        tok = self.peek()
        if tok.kind not in ("LBRK", "LPAR"):
            self.fail("temporal operator needs a range, e.g. ALWAYS-[0,30s]")
        return self.bracketed(Range)

    def interval(self) -> Interval:
        return self.bracketed(Interval)

    def predicate_name(self) -> str:
        tok = self.peek()
        if tok.kind == "UNAME":
            return self.next().text
        if tok.kind == "FRESH":
            if not re.fullmatch(r"_nf\d+", tok.text):
                self.fail("names starting with '_' are reserved for generated predicates")
            return self.next().text
        self.fail(f"expected a predicate name, found {tok.text!r}")

    def term(self, data_mode: bool) -> Term:
        tok = self.next()
        if tok.kind == "LNAME":
            return Term.const(tok.text) if data_mode else Term.var(tok.text)
        if tok.kind == "UNAME":
            return Term.const(tok.text)
        if tok.kind in ("NUMBER", "CLOCK"):
            return Term.const(tok.text)
        if tok.kind == "STRING":
            return Term.const(tok.text[1:-1])
        if tok.kind == "FRESH":
            self.fail("names starting with '_' are reserved for generated predicates", tok)
        self.fail(f"expected a term, found {tok.text!r}", tok)

    def atom(self, data_mode: bool) -> Atom:
        if self.accept("TOPKW"):
            return TOP
        if self.accept("BOTKW"):
            return BOT
        pred = self.predicate_name()
        if not self.accept("LPAR"):
            return Atom(pred)
        args = [self.term(data_mode)]
        while self.accept("COMMA"):
            args.append(self.term(data_mode))
        self.expect("RPAR", "')'")
        return Atom(pred, tuple(args))

    # -- rule files --------------------------------------------------------

    def program(self) -> Program:
        rules = []
        while self.peek().kind != "EOF":
            rule = self.rule()
            if rule is not None:
                rules.append(rule)
        return Program(rules)

    def rule(self) -> Rule | None:
        head_boxes: list[tuple[str, Range]] = []
        while True:
            if self.accept("ALWAYSP"):
                head_boxes.append(("+", self.range_()))
            elif self.accept("ALWAYSM"):
                head_boxes.append(("-", self.range_()))
            elif self.peek().kind in ("SOMETIMEP", "SOMETIMEM"):
                self.fail(
                    "SOMETIME operators cannot occur in rule heads; "
                    "only ALWAYS prefixes are allowed there"
                )
            elif self.peek().kind in ("SINCE", "UNTIL"):
                self.fail("SINCE/UNTIL cannot occur in rule heads")
            else:
                break
        head_tok = self.peek()
        head = self.atom(data_mode=False)
        if head.pred == "BOT" and head_boxes:
            self.fail("BOT head cannot carry ALWAYS prefixes", head_tok)
        self.expect("ARROW", "':-'")
        body = [self.literal()]
        while self.accept("COMMA"):
            body.append(self.literal())
        self.expect("DOT", "'.' at end of rule")
        if head.pred == "TOP":
            return None  # a TOP head makes the rule vacuous; drop it
        return Rule(head, tuple(body), tuple(head_boxes))

    def literal(self) -> BodyLiteral:
        lit = self.unary()
        tok = self.peek()
        if tok.kind in ("SINCE", "UNTIL"):
            self.next()
            rng = self.range_()
            right = self.unary()
            lit = Since(lit, rng, right) if tok.kind == "SINCE" else Until(lit, rng, right)
            if self.peek().kind in ("SINCE", "UNTIL"):
                self.fail("chained SINCE/UNTIL must be parenthesized")
        return lit

    def unary(self) -> BodyLiteral:
        tok = self.peek()
        if tok.kind == "ALWAYSP":
            self.next()
            return BoxPlus(self.range_(), self.unary())
        if tok.kind == "ALWAYSM":
            self.next()
            return BoxMinus(self.range_(), self.unary())
        if tok.kind == "SOMETIMEP":
            self.next()
            return DiamondPlus(self.range_(), self.unary())
        if tok.kind == "SOMETIMEM":
            self.next()
            return DiamondMinus(self.range_(), self.unary())
        if tok.kind == "LPAR":
            self.next()
            parts = [self.literal()]
            while self.accept("COMMA"):
                parts.append(self.literal())
            self.expect("RPAR", "')'")
            if len(parts) == 1:
                return parts[0]
            return Conj(tuple(parts))
        if tok.kind == "BOTKW":
            self.fail("BOT cannot occur in a rule body")
        if tok.kind == "TOPKW":
            self.next()
            return AtomLit(TOP)
        if tok.kind in ("UNAME", "FRESH"):
            # an atom, unless this is the left side of an inequality
            if self.tokens[self.pos + 1].kind == "NEQ":
                left = self.term(data_mode=False)
                self.next()  # NEQ
                return Neq(left, self.term(data_mode=False))
            return AtomLit(self.atom(data_mode=False))
        if tok.kind in ("LNAME", "NUMBER", "CLOCK", "STRING"):
            left = self.term(data_mode=False)
            self.expect("NEQ", "'!=' (bare terms only occur in inequalities)")
            return Neq(left, self.term(data_mode=False))
        self.fail(f"expected a body literal, found {tok.text!r}")

    # -- fact files --------------------------------------------------------

    def data(self) -> DataInstance:
        facts = []
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind in ("TOPKW", "BOTKW"):
                word = "TOP" if tok.kind == "TOPKW" else "BOT"
                self.fail(f"{word} cannot occur in a fact file")
            atom = self.atom(data_mode=True)
            self.expect("AT", "'@'")
            iv = self.interval()
            self.expect("DOT", "'.' at end of fact")
            facts.append(Fact(atom, iv))
        return DataInstance(facts, clock_style=self.saw_clock)

    # -- queries -----------------------------------------------------------

    def query(self) -> Query:
        tok = self.peek()
        if tok.kind in ("TOPKW", "BOTKW"):
            self.fail("queries must name an ordinary predicate")
        goal = self.atom(data_mode=False)
        self.accept("DOT")
        self.expect("EOF", "end of query")
        return Query(goal)


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_data(text: str) -> DataInstance:
    return _Parser(text).data()


def parse_query(text: str) -> Query:
    return _Parser(text).query()
