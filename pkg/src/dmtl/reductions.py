"""Hardness-construction generators with independent oracles.

Two encodings drive end-to-end checks of the evaluator.  A quantified
boolean formula compiles to a program and data instance that are
inconsistent exactly when the formula is true, so the consistency
checker doubles as a QBF solver.  A monotone circuit with an input
assignment compiles to a punctual entailment question whose answer is
the circuit's output value.  Both come with brute-force evaluators, so
every engine verdict on generated instances can be checked against an
implementation that shares no code with the evaluator.
"""

import random
from dataclasses import dataclass
from typing import Mapping, Optional

from dmtl.language import (
    Atom,
    DataInstance,
    Fact,
    Program,
    is_nonrecursive,
    parse_data,
    parse_program,
)
from dmtl.temporal import Interval, TimePoint

__all__ = [
    "EXISTS",
    "FORALL",
    "Qbf",
    "qbf_eval",
    "qbf_to_program",
    "parse_qdimacs",
    "format_qdimacs",
    "random_qbf",
    "INPUT_GATE",
    "AND_GATE",
    "OR_GATE",
    "MonotoneCircuit",
    "circuit_eval",
    "circuit_to_program",
    "with_consistency_probe",
    "parse_circuit",
    "format_circuit",
    "random_circuit",
]


# ---------------------------------------------------------------------------
# Quantified boolean formulas
# ---------------------------------------------------------------------------

EXISTS = "e"
FORALL = "a"


@dataclass(frozen=True)
class Qbf:
    """A fully quantified CNF formula.

    The prefix binds every variable exactly once and is stored innermost
    first: quants[i] is the quantifier of variable i, and the written
    prefix order is quants[n] ... quants[0] for n = len(quants) - 1.
    Clause literals are DIMACS-style nonzero integers, +(i+1) for
    variable i and -(i+1) for its negation.
    """

    quants: tuple[str, ...]
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.quants:
            raise ValueError("formula binds no variables")
        for q in self.quants:
            if q not in (EXISTS, FORALL):
                raise ValueError(f"unknown quantifier {q!r}")
        if not self.clauses:
            raise ValueError("formula has no clauses")
        for clause in self.clauses:
            if not clause:
                raise ValueError("empty clause")
            for lit in clause:
                if lit == 0 or abs(lit) > len(self.quants):
                    raise ValueError(f"literal {lit} out of range")

    @property
    def n(self) -> int:
        """Index of the outermost variable."""
        return len(self.quants) - 1


def qbf_eval(phi: Qbf) -> bool:
    """Exact truth value by expanding the quantifier tree."""
    if len(phi.quants) > 17:
        raise ValueError("refusing to expand more than 17 variables")
    value = [False] * len(phi.quants)

    def matrix() -> bool:
        return all(
            any(value[abs(lit) - 1] == (lit > 0) for lit in clause)
            for clause in phi.clauses
        )

    def down(i: int) -> bool:
        if i < 0:
            return matrix()
        want = phi.quants[i] == EXISTS
        for v in (True, False):
            value[i] = v
            if down(i - 1) == want:
                return want
        return not want

    return down(phi.n)


def qbf_to_program(phi: Qbf) -> tuple[Program, DataInstance]:
    """Compile the formula to a consistency question.

    The result is inconsistent exactly when the formula is true.  Time
    in [0, 2^(n+1)) enumerates assignments: the interval of length 2^i
    starting at a multiple of 2^(i+1) carries variable i's positive
    phase, the following one its negative phase.  Doubling rules copy
    the seed pattern of each variable across the whole span, clause and
    conjunction rules mark satisfying assignments with F0, quantifier
    rules collapse F_i to F_{i+1}, and falsum fires when F_{n+1} covers
    every assignment.
    """
    n = phi.n
    facts = []
    for i in range(n + 1):
        facts.append(f"P{i}_{i}@[0,{2 ** i}).")
        facts.append(f"NP{i}_{i}@[{2 ** i},{2 ** (i + 1)}).")

    rules = []
    for i in range(n + 1):
        rules.append(f"P{i} :- P{i}_{n}.")
        rules.append(f"NP{i} :- NP{i}_{n}.")
        for j in range(i, n):
            step = 2 ** (j + 1)
            for base in (f"P{i}", f"NP{i}"):
                rules.append(f"{base}_{j + 1} :- {base}_{j}.")
                rules.append(f"ALWAYS+[{step},{step}] {base}_{j + 1} :- {base}_{j}.")
    for k, clause in enumerate(phi.clauses):
        for lit in sorted(set(clause), key=lambda l: (abs(l), l < 0)):
            name = f"P{abs(lit) - 1}" if lit > 0 else f"NP{abs(lit) - 1}"
            rules.append(f"C{k} :- {name}.")
    rules.append("F0 :- " + ", ".join(f"C{k}" for k in range(len(phi.clauses))) + ".")
    for i in range(n + 1):
        width = 2 ** i
        if phi.quants[i] == EXISTS:
            rules.append(f"ALWAYS+[0,{width}] F{i + 1} :- F{i}, P{i}.")
            rules.append(f"ALWAYS-[0,{width}] F{i + 1} :- F{i}, NP{i}.")
        else:
            rules.append(
                f"ALWAYS+[0,{2 * width}) F{i + 1} :- "
                f"ALWAYS+[0,{width}) P{i}, ALWAYS+[0,{2 * width}) F{i}."
            )
    rules.append(f"BOT :- ALWAYS+[0,{2 ** (n + 1)}) F{n + 1}.")

    program = parse_program("\n".join(rules))
    if not is_nonrecursive(program):
        raise AssertionError("compiled formula program must be nonrecursive")
    return program, parse_data("\n".join(facts))


def format_qdimacs(phi: Qbf) -> str:
    """QDIMACS text, declaring quantifiers outermost first.

    External variable numbers follow declaration order, so the
    outermost variable is 1; this is the inverse of the internal
    innermost-first indexing.
    """
    n = phi.n
    lines = [f"p cnf {n + 1} {len(phi.clauses)}"]
    for i in range(n, -1, -1):
        lines.append(f"{phi.quants[i]} {n - i + 1} 0")
    for clause in phi.clauses:
        ext = [(1 if lit > 0 else -1) * (n - (abs(lit) - 1) + 1) for lit in clause]
        lines.append(" ".join(str(x) for x in ext) + " 0")
    return "\n".join(lines) + "\n"


def parse_qdimacs(text: str) -> Qbf:
    """Parse the QDIMACS subset written by format_qdimacs: comment lines,
    one problem line, single-variable e/a lines, one clause per line.
    """
    declared: list[tuple[str, int]] = []
    clauses: list[tuple[int, ...]] = []
    nvars: Optional[int] = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"malformed problem line {line!r}")
            nvars = int(parts[2])
            continue
        if line[0] in (EXISTS, FORALL) and not line[0].isdigit():
            head, *rest = line.split()
            nums = [int(x) for x in rest]
            if not nums or nums[-1] != 0:
                raise ValueError(f"quantifier line {line!r} must end with 0")
            for v in nums[:-1]:
                declared.append((head, v))
            continue
        nums = [int(x) for x in line.split()]
        if not nums or nums[-1] != 0:
            raise ValueError(f"clause line {line!r} must end with 0")
        clauses.append(tuple(nums[:-1]))
    if nvars is None:
        raise ValueError("missing problem line")
    if len(declared) != nvars:
        raise ValueError(f"{len(declared)} variables declared, problem line says {nvars}")
    n = nvars - 1
    index: dict[int, int] = {}
    quants = [""] * nvars
    for pos, (q, v) in enumerate(declared):
        if v in index:
            raise ValueError(f"variable {v} quantified twice")
        index[v] = n - pos
        quants[n - pos] = q
    mapped = []
    for clause in clauses:
        out = []
        for lit in clause:
            if abs(lit) not in index:
                raise ValueError(f"literal {lit} uses an unquantified variable")
            out.append((1 if lit > 0 else -1) * (index[abs(lit)] + 1))
        mapped.append(tuple(out))
    return Qbf(tuple(quants), tuple(mapped))


def random_qbf(seed: int, max_vars: int = 5, max_clauses: int = 6) -> Qbf:
    """Small reproducible formula; defaults match the oracle test sizes."""
    rng = random.Random(seed)
    nvars = rng.randint(1, max_vars)
    quants = tuple(rng.choice((EXISTS, FORALL)) for _ in range(nvars))
    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        width = rng.randint(1, min(3, nvars))
        chosen = rng.sample(range(nvars), width)
        clauses.append(
            tuple(v + 1 if rng.random() < 0.5 else -(v + 1) for v in chosen)
        )
    return Qbf(quants, tuple(clauses))


# ---------------------------------------------------------------------------
# Monotone circuits
# ---------------------------------------------------------------------------

INPUT_GATE = "in"
AND_GATE = "and"
OR_GATE = "or"

# Time encodes (configuration, gate) pairs: gate g's value lives at times
# 2s + g/N for configurations s >= g, where N is a power of two larger
# than every gate number.  The two copy rules advance all values by one
# configuration; the six gate rules read both operand values through the
# width-1 window against the punctual operand markers I0/I1 and the gate
# kind markers D (or) / C (and).
CIRCUIT_RULES = """\
T :- SOMETIME-[2,2] T.
F :- SOMETIME-[2,2] F.
T :- SOMETIME-[0,1] (I0, T), D.
F :- SOMETIME-[0,1] (I0, F), C.
T :- SOMETIME-[0,1] (I1, T), D.
F :- SOMETIME-[0,1] (I1, F), C.
F :- SOMETIME-[0,1] (I0, F), SOMETIME-[0,1] (I1, F), D.
T :- SOMETIME-[0,1] (I0, T), SOMETIME-[0,1] (I1, T), C.
"""


@dataclass(frozen=True)
class MonotoneCircuit:
    """AND/OR gates over boolean inputs, numbered consecutively from
    `start` so that wires always run from lower to higher numbers.

    kinds[i] and wires[i] describe gate number start + i; inputs have no
    wires, AND/OR gates exactly two.  The last gate is the output.
    """

    kinds: tuple[str, ...]
    wires: tuple[tuple[int, ...], ...]
    start: int = 0

    def __post_init__(self):
        if not self.kinds:
            raise ValueError("circuit has no gates")
        if len(self.kinds) != len(self.wires):
            raise ValueError("kinds and wires differ in length")
        if self.start < 0:
            raise ValueError("gate numbers must not be negative")
        for idx, (kind, ws) in enumerate(zip(self.kinds, self.wires)):
            num = self.start + idx
            if kind == INPUT_GATE:
                if ws:
                    raise ValueError(f"input gate {num} must not have wires")
            elif kind in (AND_GATE, OR_GATE):
                if len(ws) != 2:
                    raise ValueError(f"gate {num} needs exactly two wires")
                for w in ws:
                    if not self.start <= w < num:
                        raise ValueError(f"wire {w} -> {num} does not go upward")
            else:
                raise ValueError(f"unknown gate kind {kind!r}")

    @property
    def output(self) -> int:
        return self.start + len(self.kinds) - 1

    @property
    def modulus(self) -> int:
        """The smallest power of two strictly above the top gate number;
        gate marker fractions g/N then stay inside [0,1).
        """
        n = 1
        while n <= self.output:
            n *= 2
        return n

    def kind_of(self, gate: int) -> str:
        return self.kinds[gate - self.start]

    def wires_of(self, gate: int) -> tuple[int, ...]:
        return self.wires[gate - self.start]


def circuit_eval(circuit: MonotoneCircuit, assignment: Mapping[int, bool]) -> bool:
    """Output value by one pass in gate order."""
    value: dict[int, bool] = {}
    for idx, kind in enumerate(circuit.kinds):
        gate = circuit.start + idx
        if kind == INPUT_GATE:
            if gate not in assignment:
                raise ValueError(f"no value assigned to input gate {gate}")
            value[gate] = assignment[gate]
        else:
            a, b = (value[w] for w in circuit.wires[idx])
            value[gate] = (a and b) if kind == AND_GATE else (a or b)
    return value[circuit.output]


def _mark(gate: int, frac_gate: int, modulus: int) -> Interval:
    """The punctual interval at 2*gate + frac_gate/modulus."""
    exp = modulus.bit_length() - 1
    t = TimePoint(2 * gate * modulus + frac_gate, exp)
    return Interval(t, True, t, True)


def circuit_to_program(
    circuit: MonotoneCircuit, assignment: Mapping[int, bool]
) -> tuple[Program, DataInstance, Fact]:
    """Compile circuit and assignment to an entailment question.

    The program is the fixed eight-rule propagator; the data marks each
    gate's kind, operands, and input value at its own punctual time.
    The returned goal fact T@[2n + n/N] for the output gate n is
    entailed exactly when the circuit evaluates to true.
    """
    n = circuit.modulus
    facts: list[Fact] = []
    for idx, kind in enumerate(circuit.kinds):
        gate = circuit.start + idx
        here = _mark(gate, gate, n)
        if kind == INPUT_GATE:
            if gate not in assignment:
                raise ValueError(f"no value assigned to input gate {gate}")
            facts.append(Fact(Atom("T" if assignment[gate] else "F"), here))
        else:
            facts.append(Fact(Atom("D" if kind == OR_GATE else "C"), here))
            first, second = circuit.wires[idx]
            facts.append(Fact(Atom("I0"), _mark(gate, first, n)))
            facts.append(Fact(Atom("I1"), _mark(gate, second, n)))
    goal = Fact(Atom("T"), _mark(circuit.output, circuit.output, n))
    return parse_program(CIRCUIT_RULES), DataInstance(facts), goal


def with_consistency_probe(
    program: Program, data: DataInstance, goal: Fact
) -> tuple[Program, DataInstance]:
    """Turn an entailment question about the goal into a consistency
    question: a fresh marker at the goal time plus a falsum rule firing
    when the goal predicate meets the marker.
    """
    probe = parse_program(f"BOT :- P, {goal.atom.pred}.")
    augmented = Program(list(program.rules) + list(probe.rules))
    extended = DataInstance(
        list(data) + [Fact(Atom("P"), goal.interval)], data.clock_style
    )
    return augmented, extended


def format_circuit(circuit: MonotoneCircuit, assignment: Mapping[int, bool]) -> str:
    """One line per gate: `number kind operands`, inputs carrying their
    assigned value as T or F.
    """
    lines = []
    for idx, kind in enumerate(circuit.kinds):
        gate = circuit.start + idx
        if kind == INPUT_GATE:
            lines.append(f"{gate} in {'T' if assignment[gate] else 'F'}")
        else:
            a, b = circuit.wires[idx]
            lines.append(f"{gate} {kind} {a} {b}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> tuple[MonotoneCircuit, dict[int, bool]]:
    entries: list[tuple[int, str, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"line {lineno}: expected `number kind ...`")
        try:
            gate = int(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad gate number {parts[0]!r}") from None
        entries.append((gate, parts[1], parts[2:]))
    if not entries:
        raise ValueError("no gates")
    start = entries[0][0]
    kinds: list[str] = []
    wires: list[tuple[int, ...]] = []
    assignment: dict[int, bool] = {}
    for offset, (gate, kind, rest) in enumerate(entries):
        if gate != start + offset:
            raise ValueError(f"gate numbers must be consecutive, got {gate}")
        if kind == INPUT_GATE:
            if len(rest) != 1 or rest[0] not in ("T", "F"):
                raise ValueError(f"input gate {gate} needs a value T or F")
            assignment[gate] = rest[0] == "T"
            wires.append(())
        elif kind in (AND_GATE, OR_GATE):
            if len(rest) != 2:
                raise ValueError(f"gate {gate} needs exactly two operands")
            wires.append((int(rest[0]), int(rest[1])))
        else:
            raise ValueError(f"unknown gate kind {kind!r}")
        kinds.append(kind)
    return MonotoneCircuit(tuple(kinds), tuple(wires), start), assignment


def random_circuit(
    seed: int, max_gates: int = 16
) -> tuple[MonotoneCircuit, dict[int, bool]]:
    """Reproducible circuit with gates numbered from 0; roughly a third
    of the gates are inputs.
    """
    rng = random.Random(seed)
    count = rng.randint(1, max_gates)
    kinds: list[str] = []
    wires: list[tuple[int, ...]] = []
    assignment: dict[int, bool] = {}
    for idx in range(count):
        if idx == 0 or rng.random() < 0.35:
            kinds.append(INPUT_GATE)
            wires.append(())
            assignment[idx] = rng.random() < 0.5
        else:
            kinds.append(rng.choice((AND_GATE, OR_GATE)))
            a = rng.randrange(idx)
            b = rng.randrange(idx)
            if a == b and idx > 1:
                b = rng.choice([x for x in range(idx) if x != a])
            wires.append((a, b))
    return MonotoneCircuit(tuple(kinds), tuple(wires)), assignment
