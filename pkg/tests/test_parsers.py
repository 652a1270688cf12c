"""Tests for the model, distribution, formula and equation parsers."""

from fractions import Fraction

import pytest

from src.probmu.models.dist import Dist
from src.probmu.models.formula import FALSE, TRUE, Box, Conj, Diamond, Disj, Down, Nu, OPlus, OPlusW, Ref, Var
from src.probmu.processors.formula_parser import parse_equations, parse_formula, print_equations, print_formula
from src.probmu.processors.plts_parser import parse_distribution, parse_plts, serialize_plts
from src.probmu.utils.error_handling import ParsingError, ValidationError

from .conftest import CONVEX_MODEL, TAU_MODEL


class TestPLTSParser:
    """Test the line-oriented system format."""

    def test_parse_example(self, convex_plts):
        """Test parsing a model with comments and an actions line."""
        assert convex_plts.states == ("s", "t", "v", "w", "x")
        assert convex_plts.targets("s", "a") == (Dist.of({"v": Fraction(1, 2), "w": Fraction(1, 2)}),)
        assert len(convex_plts.transitions) == 5

    def test_alphabet_inferred(self):
        """Test that the alphabet defaults to the external labels used."""
        plts = parse_plts(TAU_MODEL)
        assert plts.alphabet == ("a",)
        assert plts.has_tau("s")

    def test_serialize_is_stable(self, convex_plts):
        """Test that the canonical text parses back to the same system."""
        text = serialize_plts(convex_plts)
        again = parse_plts(text)
        assert again.digest == convex_plts.digest
        assert serialize_plts(again) == text

    def test_weights_must_sum_to_one(self):
        """Test rejection of a sub-distribution target."""
        with pytest.raises(ValidationError):
            parse_plts("states: s t\ns a -> 1/2 t\n")

    def test_undeclared_state(self):
        """Test rejection of a target outside the states line."""
        with pytest.raises(ValidationError):
            parse_plts("states: s\ns a -> t\n")

    def test_missing_arrow(self):
        """Test the position reported for a malformed transition."""
        with pytest.raises(ParsingError) as exc_info:
            parse_plts("states: s\ns a 1/2 s\n")
        assert exc_info.value.line == 2

    def test_weight_above_one(self):
        """Test rejection of weights larger than one."""
        with pytest.raises(ParsingError):
            parse_plts("states: s\ns a -> 3/2 s\n")

    def test_zero_denominator(self):
        """Test that a weight such as 1/0 is a syntax error at its position."""
        with pytest.raises(ParsingError) as exc_info:
            parse_plts("states: s t\ns a -> 1/0 t\n")
        assert exc_info.value.line == 2
        assert exc_info.value.column == 8

    def test_action_missing_from_actions_line(self):
        """Test that declared alphabets must cover the labels used."""
        with pytest.raises(ValidationError):
            parse_plts("states: s\nactions: b\ns a -> s\n")

    def test_tau_cannot_be_declared(self):
        """Test that the internal action is implicit."""
        with pytest.raises(ParsingError):
            parse_plts("states: s\nactions: tau\n")

    def test_no_states(self):
        """Test that a document needs a states line."""
        with pytest.raises(ValidationError):
            parse_plts("# nothing here\n")


class TestDistributionParser:
    """Test command-line distributions."""

    def test_weighted_sum(self, convex_plts):
        """Test a two-state distribution."""
        dist = parse_distribution("1/2 v + 1/2 w", convex_plts)
        assert dist == Dist.of({"v": Fraction(1, 2), "w": Fraction(1, 2)})

    def test_bare_state(self):
        """Test that a bare name is a point distribution."""
        assert parse_distribution("s") == Dist.point("s")

    def test_unknown_state(self, convex_plts):
        """Test rejection of states outside the system."""
        with pytest.raises(ValidationError):
            parse_distribution("1/2 v + 1/2 q", convex_plts)

    def test_dangling_plus(self):
        """Test rejection of an empty term."""
        with pytest.raises(ParsingError):
            parse_distribution("1/2 v +")

    def test_zero_denominator(self):
        """Test that a zero denominator is a syntax error, not an arithmetic one."""
        with pytest.raises(ParsingError) as exc_info:
            parse_distribution("1/0 v + 1/2 w")
        assert exc_info.value.column == 1


class TestFormulaParser:
    """Test the concrete formula syntax."""

    def test_modalities(self):
        """Test diamonds, boxes and constants."""
        assert parse_formula("<a>true") == Diamond("a", TRUE)
        assert parse_formula("[b]false") == Box("b", FALSE)

    def test_precedence(self):
        """Test that conjunction binds tighter than choice and disjunction."""
        formula = parse_formula("<a>true /\\ [a]false \\/ true")
        assert formula == Disj((Conj((Diamond("a", TRUE), Box("a", FALSE))), TRUE))

    def test_weighted_choice(self):
        """Test weighted probabilistic choice."""
        formula = parse_formula("1/2*down X (+) 1/2*down Y")
        assert formula == OPlusW(((Fraction(1, 2), Down(Var("X"))), (Fraction(1, 2), Down(Var("Y")))))

    def test_unweighted_choice(self):
        """Test the n-ary unweighted choice."""
        assert parse_formula("oplus(true, <a>true)") == OPlus((TRUE, Diamond("a", TRUE)))

    def test_fixpoint_binder_extends_right(self):
        """Test that binders take the rest of the formula."""
        assert parse_formula("nu X. <a>down X /\\ true") == Nu("X", Conj((Diamond("a", Down(Var("X"))), TRUE)))

    def test_refusal(self):
        """Test refusal atoms."""
        assert parse_formula("ref{a, b}") == Ref(("a", "b"))
        assert parse_formula("ref{}") == Ref(())

    def test_refusal_rejects_tau(self):
        """Test that tau cannot be refused explicitly."""
        with pytest.raises(ParsingError):
            parse_formula("ref{tau}")

    def test_mixed_weights_rejected(self):
        """Test that a choice is weighted everywhere or nowhere."""
        with pytest.raises(ParsingError):
            parse_formula("1/2*true (+) false")

    def test_zero_denominator_weight(self):
        """Test that a choice weight of 1/0 is rejected at its column."""
        with pytest.raises(ParsingError) as exc_info:
            parse_formula("1/0*true (+) 1/2*false")
        assert exc_info.value.column == 1

    def test_unterminated_modality(self):
        """Test the error for a modality without its closing bracket."""
        with pytest.raises(ParsingError) as exc_info:
            parse_formula("<a true")
        assert exc_info.value.column is not None

    def test_negative_occurrence_rejected(self):
        """Test the polarity check on parsed formulae."""
        with pytest.raises(ValidationError):
            parse_formula("nu X. not <a>down X")

    def test_printed_form_reads_back(self):
        """Test that printing then parsing gives the same tree."""
        formula = parse_formula("nu X. (<a>(1/3*down X (+) 2/3*down [b]false) /\\ not <c>true) \\/ ref{a}")
        assert parse_formula(print_formula(formula)) == formula


class TestEquationParser:
    """Test equation systems."""

    def test_parse_system(self):
        """Test a two-equation system with comments."""
        system = parse_equations("# root first\nX = <a>down Y\n\nY = [a]false\n")
        assert system.root == "X"
        assert system.body("X") == Diamond("a", Down(Var("Y")))

    def test_missing_equals(self):
        """Test rejection of lines without an equation."""
        with pytest.raises(ParsingError):
            parse_equations("X <a>true\n")

    def test_undefined_variable(self):
        """Test rejection of bodies mentioning unknown variables."""
        with pytest.raises(ValidationError):
            parse_equations("X = <a>down Z\n")

    def test_binder_in_body(self):
        """Test that bodies must be fixpoint-free."""
        with pytest.raises(ParsingError):
            parse_equations("X = nu Y. <a>down Y\n")

    def test_print_equations(self):
        """Test the printed form of a system."""
        system = parse_equations("X = <a>down Y\nY = true\n")
        assert print_equations(system) == "X = <a>down Y\nY = true\n"
        assert parse_equations(print_equations(system)).equations == system.equations
