"""Program and data language: AST, text syntax, parser, validation,
normal-form transformation, and the static analyses (dependence graph,
depth, bounds, endpoint-offset sets)."""

from dmtl.language.syntax import (
    Atom,
    BodyLiteral,
    DataInstance,
    Fact,
    Program,
    Query,
    Rule,
    Term,
    BOT,
    TOP,
)
from dmtl.language.parser import ParseError, parse_data, parse_program, parse_query
from dmtl.language.normalize import is_normal_form, normalize
from dmtl.language.analysis import bounds, dependence, depth, is_nonrecursive, le_ri
