"""Hardness constructions against their brute-force oracles.

The QBF compiler is checked three ways: frozen program text for the
one-variable formula, engine consistency verdicts against qbf_eval, and
QDIMACS round trips.  The circuit compiler gets the same treatment with
circuit_eval as the oracle, including the consistency-probe variant.
"""

import itertools
import random

import pytest

from dmtl.engine import certain_answer, chase, eval_nonrecursive
from dmtl.language import Query, dependence, is_nonrecursive, normalize
from dmtl.reductions import (
    AND_GATE,
    EXISTS,
    FORALL,
    INPUT_GATE,
    OR_GATE,
    CIRCUIT_RULES,
    MonotoneCircuit,
    Qbf,
    circuit_eval,
    circuit_to_program,
    format_circuit,
    format_qdimacs,
    parse_circuit,
    parse_qdimacs,
    qbf_eval,
    qbf_to_program,
    random_circuit,
    random_qbf,
    with_consistency_probe,
)


def qbf_verdict(phi: Qbf) -> bool:
    """True when the engine finds the compiled formula inconsistent."""
    program, data = qbf_to_program(phi)
    model = eval_nonrecursive(normalize(program), data)
    return model.inconsistent


def circuit_verdict(circuit, assignment) -> bool:
    program, data, goal = circuit_to_program(circuit, assignment)
    model, _ = chase(normalize(program), data, round_cap=8 * circuit.modulus)
    return certain_answer(model, Query(goal.atom), (), goal.interval)


FIGURE = MonotoneCircuit(
    ("in", "in", "in", "or", "and", "and"),
    ((), (), (), (0, 1), (1, 2), (3, 4)),
)
FIGURE_INPUTS = {0: True, 1: False, 2: True}


class TestQbfType:
    def test_rejects_empty_prefix(self):
        with pytest.raises(ValueError, match="binds no variables"):
            Qbf((), ((1,),))

    def test_rejects_unknown_quantifier(self):
        with pytest.raises(ValueError, match="quantifier"):
            Qbf(("forall",), ((1,),))

    def test_rejects_empty_matrix(self):
        with pytest.raises(ValueError, match="no clauses"):
            Qbf(("e",), ())

    def test_rejects_empty_clause(self):
        with pytest.raises(ValueError, match="empty clause"):
            Qbf(("e",), ((1,), ()))

    def test_rejects_zero_literal(self):
        with pytest.raises(ValueError, match="out of range"):
            Qbf(("e",), ((0,),))

    def test_rejects_unbound_literal(self):
        with pytest.raises(ValueError, match="out of range"):
            Qbf(("e", "a"), ((-3,),))

    def test_outermost_index(self):
        assert Qbf(("e", "a", "e"), ((1,),)).n == 2


class TestQbfEval:
    def test_exists_true(self):
        assert qbf_eval(Qbf((EXISTS,), ((1,),))) is True

    def test_forall_false(self):
        assert qbf_eval(Qbf((FORALL,), ((1,),))) is False

    def test_alternation_true(self):
        # forall p exists q . (p or q) and (not p or q); q := true works
        phi = Qbf((EXISTS, FORALL), ((2, 1), (-2, 1)))
        assert qbf_eval(phi) is True

    def test_alternation_false(self):
        # exists q forall p . (q or p) and (not q or p)
        phi = Qbf((FORALL, EXISTS), ((2, 1), (-2, 1)))
        assert qbf_eval(phi) is False

    def test_refuses_huge_prefix(self):
        phi = Qbf(("e",) * 18, ((1,),))
        with pytest.raises(ValueError, match="17"):
            qbf_eval(phi)

    @pytest.mark.parametrize("seed", range(60))
    def test_uniform_prefixes_match_brute_force(self, seed):
        rng = random.Random(seed)
        base = random_qbf(seed, max_vars=4)
        nvars = len(base.quants)
        letter = rng.choice((EXISTS, FORALL))
        phi = Qbf((letter,) * nvars, base.clauses)

        def sat(assignment):
            return all(
                any(assignment[abs(l) - 1] == (l > 0) for l in clause)
                for clause in phi.clauses
            )

        rows = list(itertools.product((False, True), repeat=nvars))
        want = any(map(sat, rows)) if letter == EXISTS else all(map(sat, rows))
        assert qbf_eval(phi) == want


class TestQbfProgram:
    def test_one_variable_program_text(self):
        program, data = qbf_to_program(Qbf(("e",), ((1,),)))
        assert [str(r) for r in program.rules] == [
            "P0 :- P0_0.",
            "NP0 :- NP0_0.",
            "C0 :- P0.",
            "F0 :- C0.",
            "ALWAYS+[0,1] F1 :- F0, P0.",
            "ALWAYS-[0,1] F1 :- F0, NP0.",
            "BOT :- ALWAYS+[0,2) F1.",
        ]
        assert [str(f) for f in data] == ["P0_0@[0,1).", "NP0_0@[1,2)."]

    def test_doubling_and_forall_rules(self):
        phi = Qbf(("e", "a"), ((2, 1), (-2, 1)))
        program, data = qbf_to_program(phi)
        text = [str(r) for r in program.rules]
        assert "ALWAYS+[2,2] P0_1 :- P0_0." in text
        assert "ALWAYS+[2,2] NP0_1 :- NP0_0." in text
        assert "ALWAYS+[0,4) F2 :- ALWAYS+[0,2) P1, ALWAYS+[0,4) F1." in text
        assert "BOT :- ALWAYS+[0,4) F2." in text
        # the outermost variable's seed phases split [0,4) in half
        assert "P1_1@[0,2)." in [str(f) for f in data]

    def test_duplicate_literals_collapse(self):
        program, _ = qbf_to_program(Qbf(("e",), ((1, 1, -1),)))
        text = [str(r) for r in program.rules]
        assert text.count("C0 :- P0.") == 1
        assert text.count("C0 :- NP0.") == 1

    @pytest.mark.parametrize("seed", range(25))
    def test_always_nonrecursive(self, seed):
        program, _ = qbf_to_program(random_qbf(seed))
        assert is_nonrecursive(program)


class TestQbfEngine:
    def test_true_formula_inconsistent(self):
        assert qbf_verdict(Qbf(("e",), ((1,),))) is True

    def test_false_formula_consistent(self):
        assert qbf_verdict(Qbf(("a",), ((1,),))) is False

    def test_alternation_pair(self):
        assert qbf_verdict(Qbf((EXISTS, FORALL), ((2, 1), (-2, 1)))) is True
        assert qbf_verdict(Qbf((FORALL, EXISTS), ((2, 1), (-2, 1)))) is False

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_oracle(self, seed):
        phi = random_qbf(seed)
        assert qbf_verdict(phi) == qbf_eval(phi)


class TestQdimacs:
    def test_format_one_variable(self):
        text = format_qdimacs(Qbf(("e",), ((1,),)))
        assert text == "p cnf 1 1\ne 1 0\n1 0\n"

    def test_format_declares_outermost_first(self):
        text = format_qdimacs(Qbf(("e", "a"), ((2, 1), (-2, 1))))
        assert text == "p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 2 0\n"

    def test_comments_and_blank_lines_ignored(self):
        phi = parse_qdimacs("c header\n\np cnf 1 1\nc mid\ne 1 0\n1 0\n")
        assert phi == Qbf(("e",), ((1,),))

    def test_grouped_quantifier_line(self):
        phi = parse_qdimacs("p cnf 2 1\na 1 2 0\n1 -2 0\n")
        assert phi.quants == (FORALL, FORALL)
        assert phi.clauses == ((2, -1),)

    @pytest.mark.parametrize("seed", range(50))
    def test_round_trip(self, seed):
        phi = random_qbf(seed)
        assert parse_qdimacs(format_qdimacs(phi)) == phi

    def test_missing_problem_line(self):
        with pytest.raises(ValueError, match="problem line"):
            parse_qdimacs("e 1 0\n1 0\n")

    def test_malformed_problem_line(self):
        with pytest.raises(ValueError, match="problem line"):
            parse_qdimacs("p sat 1 1\ne 1 0\n1 0\n")

    def test_quantifier_line_needs_terminator(self):
        with pytest.raises(ValueError, match="end with 0"):
            parse_qdimacs("p cnf 1 1\ne 1\n1 0\n")

    def test_clause_needs_terminator(self):
        with pytest.raises(ValueError, match="end with 0"):
            parse_qdimacs("p cnf 1 1\ne 1 0\n1\n")

    def test_declaration_count_must_match(self):
        with pytest.raises(ValueError, match="declared"):
            parse_qdimacs("p cnf 2 1\ne 1 0\n1 0\n")

    def test_double_quantification(self):
        with pytest.raises(ValueError, match="twice"):
            parse_qdimacs("p cnf 2 1\ne 1 0\na 1 0\n1 0\n")

    def test_free_variable_literal(self):
        with pytest.raises(ValueError, match="unquantified"):
            parse_qdimacs("p cnf 1 1\ne 1 0\n2 0\n")


class TestCircuitType:
    def test_rejects_no_gates(self):
        with pytest.raises(ValueError, match="no gates"):
            MonotoneCircuit((), ())

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            MonotoneCircuit(("in", "in"), ((),))

    def test_rejects_negative_start(self):
        with pytest.raises(ValueError, match="negative"):
            MonotoneCircuit(("in",), ((),), start=-1)

    def test_rejects_wired_input(self):
        with pytest.raises(ValueError, match="must not have wires"):
            MonotoneCircuit(("in", "in"), ((), (0,)))

    def test_rejects_single_operand(self):
        with pytest.raises(ValueError, match="two wires"):
            MonotoneCircuit(("in", "and"), ((), (0,)))

    def test_rejects_forward_wire(self):
        with pytest.raises(ValueError, match="upward"):
            MonotoneCircuit(("in", "or"), ((), (0, 1)))

    def test_rejects_wire_below_start(self):
        with pytest.raises(ValueError, match="upward"):
            MonotoneCircuit(("in", "or"), ((), (0, 1)), start=1)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            MonotoneCircuit(("nand",), ((),))

    def test_modulus_is_next_power_of_two(self):
        assert FIGURE.modulus == 8
        assert MonotoneCircuit(("in",), ((),)).modulus == 1
        assert MonotoneCircuit(("in",), ((),), start=1).modulus == 2
        three = MonotoneCircuit(("in", "in", "or"), ((), (), (0, 1)))
        assert three.modulus == 4


class TestCircuitEval:
    def test_or_gate(self):
        c = MonotoneCircuit(("in", "in", "or"), ((), (), (0, 1)))
        assert circuit_eval(c, {0: True, 1: False}) is True

    def test_and_gate(self):
        c = MonotoneCircuit(("in", "in", "and"), ((), (), (0, 1)))
        assert circuit_eval(c, {0: True, 1: False}) is False

    def test_three_gate_trace(self):
        assert circuit_eval(FIGURE, FIGURE_INPUTS) is False

    def test_missing_input_value(self):
        c = MonotoneCircuit(("in",), ((),))
        with pytest.raises(ValueError, match="input gate 0"):
            circuit_eval(c, {})


class TestCircuitProgram:
    def test_program_is_the_fixed_rule_set(self):
        program, _, _ = circuit_to_program(FIGURE, FIGURE_INPUTS)
        assert str(program) == CIRCUIT_RULES
        assert len(program.rules) == 8

    def test_six_gate_marks(self):
        _, data, goal = circuit_to_program(FIGURE, FIGURE_INPUTS)
        assert str(goal) == "T@[10.625,10.625]."
        got = sorted(str(f) for f in data)
        assert got == sorted(
            [
                "T@[0,0].",
                "F@[2.125,2.125].",
                "T@[4.25,4.25].",
                # gate 3 = OR(0, 1)
                "D@[6.375,6.375].",
                "I0@[6,6].",
                "I1@[6.125,6.125].",
                # gate 4 = AND(1, 2)
                "C@[8.5,8.5].",
                "I0@[8.125,8.125].",
                "I1@[8.25,8.25].",
                # gate 5 = AND(3, 4)
                "C@[10.625,10.625].",
                "I0@[10.375,10.375].",
                "I1@[10.5,10.5].",
            ]
        )

    def test_shifted_numbering_scales_the_marks(self):
        c = MonotoneCircuit(("in",), ((),), start=1)
        _, data, goal = circuit_to_program(c, {1: True})
        assert [str(f) for f in data] == ["T@[2.5,2.5]."]
        assert str(goal) == "T@[2.5,2.5]."

    def test_missing_input_value(self):
        with pytest.raises(ValueError, match="input gate 1"):
            circuit_to_program(FIGURE, {0: True, 2: True})

    def test_recursion_confined_to_value_predicates(self):
        program, _, _ = circuit_to_program(FIGURE, FIGURE_INPUTS)
        assert not is_nonrecursive(program)
        # the only cycles are the self-loops on the two value predicates
        # that the copy rules keep advancing; the marks stay below them
        edges = dependence(program)
        loops = {p for p, deps in edges.items() if p in deps}
        assert loops == {"T", "F"}
        for pred, deps in edges.items():
            if pred not in loops:
                assert not deps


class TestCircuitEngine:
    def test_figure_output_is_false(self):
        program, data, goal = circuit_to_program(FIGURE, FIGURE_INPUTS)
        model, status = chase(normalize(program), data, round_cap=8 * FIGURE.modulus)
        assert not model.inconsistent
        assert certain_answer(model, Query(goal.atom), (), goal.interval) is False
        # the complementary verdict: the output gate computes false
        from dmtl.language import Atom

        assert certain_answer(model, Query(Atom("F")), (), goal.interval) is True

    def test_single_input_gate(self):
        c = MonotoneCircuit(("in",), ((),), start=1)
        assert circuit_verdict(c, {1: True}) is True
        assert circuit_verdict(c, {1: False}) is False

    def test_and_of_true_false(self):
        c = MonotoneCircuit(("in", "in", "and"), ((), (), (0, 1)))
        assert circuit_verdict(c, {0: True, 1: False}) is False

    def test_or_of_true_false(self):
        c = MonotoneCircuit(("in", "in", "or"), ((), (), (0, 1)))
        assert circuit_verdict(c, {0: True, 1: False}) is True

    def test_consistency_probe_fires_on_true_only(self):
        def probe_verdict(circuit, assignment):
            program, data, goal = circuit_to_program(circuit, assignment)
            program, data = with_consistency_probe(program, data, goal)
            model, _ = chase(normalize(program), data, round_cap=8 * circuit.modulus)
            return model.inconsistent

        c = MonotoneCircuit(("in", "in", "or"), ((), (), (0, 1)))
        assert probe_verdict(c, {0: True, 1: False}) is True
        assert probe_verdict(FIGURE, FIGURE_INPUTS) is False

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_oracle(self, seed):
        circuit, assignment = random_circuit(seed)
        assert circuit_verdict(circuit, assignment) == circuit_eval(circuit, assignment)


class TestCircuitFormat:
    def test_figure_text(self):
        text = format_circuit(FIGURE, FIGURE_INPUTS)
        assert text == (
            "0 in T\n1 in F\n2 in T\n3 or 0 1\n4 and 1 2\n5 and 3 4\n"
        )

    def test_parse_with_comments(self):
        circuit, assignment = parse_circuit(
            "# two inputs\n0 in T\n1 in F\n2 and 0 1  # conjunction\n"
        )
        assert circuit.kinds == (INPUT_GATE, INPUT_GATE, AND_GATE)
        assert circuit.wires == ((), (), (0, 1))
        assert assignment == {0: True, 1: False}

    def test_detects_shifted_start(self):
        circuit, _ = parse_circuit("1 in T\n2 in T\n3 or 1 2\n")
        assert circuit.start == 1
        assert circuit.output == 3

    @pytest.mark.parametrize("seed", range(40))
    def test_round_trip(self, seed):
        circuit, assignment = random_circuit(seed)
        back, back_assignment = parse_circuit(format_circuit(circuit, assignment))
        assert back == circuit
        assert back_assignment == assignment

    def test_rejects_gap_in_numbering(self):
        with pytest.raises(ValueError, match="consecutive"):
            parse_circuit("0 in T\n2 in F\n")

    def test_rejects_bad_gate_number(self):
        with pytest.raises(ValueError, match="gate number"):
            parse_circuit("x in T\n")

    def test_rejects_valueless_input(self):
        with pytest.raises(ValueError, match="value"):
            parse_circuit("0 in\n")

    def test_rejects_empty_text(self):
        with pytest.raises(ValueError, match="no gates"):
            parse_circuit("# nothing here\n")


class TestRandomGenerators:
    def test_qbf_deterministic(self):
        assert random_qbf(7) == random_qbf(7)

    def test_circuit_deterministic(self):
        assert random_circuit(7) == random_circuit(7)

    def test_circuit_sizes_and_start(self):
        for seed in range(30):
            circuit, assignment = random_circuit(seed)
            assert circuit.start == 0
            assert 1 <= len(circuit.kinds) <= 16
            assert circuit.kinds[0] == INPUT_GATE
            assert set(assignment) == {
                circuit.start + i
                for i, k in enumerate(circuit.kinds)
                if k == INPUT_GATE
            }
